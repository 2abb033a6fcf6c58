#include "vaxledger/chain_store.hpp"

#include <fcntl.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vaxledger::ledger {

ParsedChain parse_chain_bytes(std::string_view bytes) {
  ParsedChain out;
  std::size_t pos = 0;
  std::uint64_t line_no = 0;
  while (pos < bytes.size()) {
    std::size_t nl = bytes.find('\n', pos);
    bool terminated = nl != std::string_view::npos;
    std::size_t end = terminated ? nl : bytes.size();
    std::string_view line = bytes.substr(pos, end - pos);
    std::size_t next = terminated ? nl + 1 : bytes.size();
    bool last = next >= bytes.size();

    std::optional<std::string> problem;
    if (!terminated) {
      problem = "unterminated line";
    } else {
      try {
        out.blocks.push_back(Block::from_value(codec::decode_canonical(line)));
      } catch (const std::exception& e) {
        problem = e.what();
      }
    }
    if (problem) {
      out.error = ChainError{ChainErrorCode::MalformedBlock, line_no, *problem};
      out.torn_tail = last;
      return out;
    }
    pos = next;
    out.valid_bytes = pos;
    ++line_no;
  }
  return out;
}

std::optional<ChainError> validate_chain_bytes(std::string_view bytes, const crypto::PublicKey& producer_key) {
  auto parsed = parse_chain_bytes(bytes);
  ChainValidator v(producer_key);
  for (const auto& b : parsed.blocks) {
    if (auto err = v.push(b)) return err;
  }
  return parsed.error;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ChainStore::ChainStore(std::filesystem::path path) : path_(std::move(path)) {}

std::vector<Block> ChainStore::load_and_recover() {
  if (!std::filesystem::exists(path_)) return {};
  const std::string bytes = read_file(path_);
  auto parsed = parse_chain_bytes(bytes);
  if (parsed.error) {
    if (!parsed.torn_tail) throw CorruptChainFile(*parsed.error);
    spdlog::warn("chain file {}: truncating torn trailing line at height {} ({} bytes): {}", path_.string(),
                 parsed.error->height, bytes.size() - parsed.valid_bytes, parsed.error->detail);
    std::filesystem::resize_file(path_, parsed.valid_bytes);
  }
  return std::move(parsed.blocks);
}

void ChainStore::append(const Block& block) { append_all(std::span(&block, 1)); }

void ChainStore::append_all(std::span<const Block> blocks) {
  std::string data;
  for (const auto& b : blocks) {
    data += codec::encode_canonical(b.to_value());
    data.push_back('\n');
  }
  int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw PersistFailure("open " + path_.string() + ": " + std::strerror(errno));
  const off_t original_size = ::lseek(fd, 0, SEEK_END);
  auto fail = [&](const char* op) {
    int err = errno;
    // Roll back a partial append so later appends don't land after garbage.
    if (original_size >= 0 && ::ftruncate(fd, original_size) != 0) {
      spdlog::error("chain file {}: rollback after failed {} also failed", path_.string(), op);
    }
    ::close(fd);
    throw PersistFailure(std::string(op) + " " + path_.string() + ": " + std::strerror(err));
  };
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("write");
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) fail("fsync");
  ::close(fd);
}

}  // namespace vaxledger::ledger
