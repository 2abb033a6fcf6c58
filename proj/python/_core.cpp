#include "vaxledger/chain_store.hpp"
#include "vaxledger/credential.hpp"
#include "vaxledger/merkle.hpp"
#include "vaxledger/node.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
namespace vl = vaxledger;

namespace {

vl::codec::Value to_value(const py::handle& o) {
  if (o.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(o)) return o.cast<bool>();
  if (py::isinstance<py::int_>(o)) return o.cast<std::int64_t>();
  if (py::isinstance<py::float_>(o)) throw vl::codec::UnsupportedValue("floats are not encodable");
  if (py::isinstance<py::str>(o)) return o.cast<std::string>();
  if (py::isinstance<py::bytes>(o)) {
    auto s = o.cast<std::string>();
    return vl::codec::Bytes(s.begin(), s.end());
  }
  if (py::isinstance<py::dict>(o)) {
    vl::codec::Map m;
    for (auto [k, v] : o.cast<py::dict>()) {
      if (!py::isinstance<py::str>(k)) throw vl::codec::UnsupportedValue("map keys must be str");
      m.emplace(k.cast<std::string>(), to_value(v));
    }
    return m;
  }
  if (py::isinstance<py::list>(o) || py::isinstance<py::tuple>(o)) {
    vl::codec::List l;
    for (auto v : o) l.push_back(to_value(v));
    return l;
  }
  throw vl::codec::UnsupportedValue("unsupported type " + std::string(py::str(o.get_type())));
}

py::object to_python(const vl::codec::Value& v) {
  if (v.is_null()) return py::none();
  if (v.is_bool()) return py::bool_(v.as_bool());
  if (v.is_int()) return py::int_(v.as_int());
  if (v.is_text()) return py::str(v.as_text());
  if (v.is_bytes()) {
    const auto& b = v.as_bytes();
    return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
  }
  if (v.is_list()) {
    py::list l;
    for (const auto& e : v.as_list()) l.append(to_python(e));
    return l;
  }
  py::dict d;
  for (const auto& [k, e] : v.as_map()) d[py::str(k)] = to_python(e);
  return d;
}

py::bytes digest_bytes(const vl::codec::Digest32& d) {
  return py::bytes(reinterpret_cast<const char*>(d.bytes.data()), d.bytes.size());
}

vl::codec::Digest32 digest_from(const py::bytes& b) {
  std::string s = b;
  if (s.size() != 32) throw py::value_error("digest must be 32 bytes");
  vl::codec::Digest32 d;
  std::copy(s.begin(), s.end(), d.bytes.begin());
  return d;
}

std::vector<vl::codec::Digest32> digests_from(const std::vector<py::bytes>& leaves) {
  std::vector<vl::codec::Digest32> out;
  out.reserve(leaves.size());
  for (const auto& l : leaves) out.push_back(digest_from(l));
  return out;
}

py::dict header_dict(const vl::ledger::BlockHeader& h) {
  py::dict d = to_python(h.to_value());
  d["block_id"] = vl::ledger::block_id(h).hex();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "vaxledger core bindings";
  vl::crypto::ensure_initialized();

  py::register_exception<vl::codec::UnsupportedValue>(m, "UnsupportedValue", PyExc_ValueError);
  py::register_exception<vl::codec::DecodeError>(m, "DecodeError", PyExc_ValueError);
  py::register_exception<vl::codec::SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<vl::registry::InvalidAadhaar>(m, "InvalidAadhaar", PyExc_ValueError);
  py::register_exception<vl::auth::AuthError>(m, "AuthError");
  py::register_exception<vl::node::NodeError>(m, "NodeError");
  py::register_exception<vl::node::ConfigError>(m, "ConfigError");

  // codec
  m.def("encode_canonical", [](const py::object& o) {
    auto s = vl::codec::encode_canonical(to_value(o));
    return py::bytes(s);
  });
  m.def("decode_canonical", [](const py::bytes& b) { return to_python(vl::codec::decode_canonical(std::string(b))); });
  m.def("sha256", [](const py::bytes& b) { return digest_bytes(vl::codec::hash_sha256(std::string_view(b))); });
  m.def("verhoeff_validate", &vl::codec::verhoeff_validate);
  m.def("is_valid_aadhaar", &vl::registry::is_valid_aadhaar);

  // merkle
  m.def("merkle_root", [](const std::vector<py::bytes>& leaves) {
    return digest_bytes(vl::ledger::merkle_root(digests_from(leaves)));
  });
  m.def(
      "merkle_prove",
      [](const std::vector<py::bytes>& leaves, std::size_t index) {
        auto p = vl::ledger::merkle_prove(digests_from(leaves), index);
        py::list siblings, directions;
        for (const auto& s : p.siblings) siblings.append(digest_bytes(s));
        for (auto d : p.directions) directions.append(d == vl::ledger::Side::Left ? "L" : "R");
        return py::make_tuple(siblings, directions);
      },
      py::arg("leaves"), py::arg("index"));
  m.def(
      "merkle_verify",
      [](const py::bytes& leaf, std::size_t index, const std::vector<py::bytes>& siblings,
         const std::vector<std::string>& directions, const py::bytes& root) {
        vl::ledger::MerkleProof p;
        p.leaf_index = index;
        p.siblings = digests_from(siblings);
        for (const auto& d : directions) p.directions.push_back(d == "L" ? vl::ledger::Side::Left : vl::ledger::Side::Right);
        return vl::ledger::merkle_verify(digest_from(leaf), p, digest_from(root));
      },
      py::arg("leaf"), py::arg("index"), py::arg("siblings"), py::arg("directions"), py::arg("root"));

  // chain files
  m.def(
      "validate_chain_file",
      [](const std::filesystem::path& path, const std::string& producer_pubkey) -> py::object {
        auto err = vl::ledger::validate_chain_bytes(vl::ledger::read_file(path),
                                                    vl::crypto::PublicKey::from_hex(producer_pubkey));
        if (!err) return py::none();
        return py::make_tuple(std::string(vl::ledger::to_string(err->code)), err->height, err->detail);
      },
      "None if valid, else (error_code, height, detail).");

  // credentials
  m.def(
      "verify_qr_payload",
      [](const std::string& payload, const std::string& pubkey, std::int64_t now, std::int64_t validity_days) {
        return std::string(vl::credential::to_string(vl::credential::verify_qr_payload(
            payload, vl::crypto::PublicKey::from_hex(pubkey), now, validity_days * 86400)));
      },
      py::arg("payload"), py::arg("pubkey"), py::arg("now"), py::arg("validity_days") = 365);
  m.def("decode_qr_payload",
        [](const std::string& payload) { return to_python(vl::credential::decode_qr_payload(payload).to_value()); });

  // node
  m.def(
      "init_data_dir",
      [](const std::filesystem::path& data_dir, const std::string& email, const std::string& password,
         bool minimal_kdf, const std::string& listen_addr) {
        vl::node::InitOptions o;
        o.data_dir = data_dir;
        o.authority_email = email;
        o.authority_password = password;
        o.listen_addr = listen_addr;
        if (minimal_kdf) o.kdf = vl::auth::KdfParams::minimal();
        auto r = vl::node::initialize_data_dir(o);
        py::dict d;
        d["credential_pubkey"] = r.credential_pubkey.hex();
        d["producer_pubkey"] = r.producer_pubkey.hex();
        d["config"] = r.config_path;
        d["genesis_block_id"] = r.genesis_id.hex();
        return d;
      },
      py::arg("data_dir"), py::arg("email"), py::arg("password"), py::arg("minimal_kdf") = false,
      py::arg("listen_addr") = "127.0.0.1:8080");

  py::class_<vl::node::Node>(m, "Node")
      .def(py::init([](const std::filesystem::path& config) {
             return std::make_unique<vl::node::Node>(vl::node::NodeConfig::load(config));
           }),
           py::arg("config"))
      .def("login",
           [](vl::node::Node& n, const std::string& email, const std::string& password) {
             auto s = n.login(email, password);
             py::dict d;
             d["token"] = s.token_id;
             d["account_id"] = s.account_id;
             d["role"] = std::string(vl::registry::to_string(s.role));
             d["expires_at"] = s.expires_at;
             return d;
           })
      .def(
          "create_account",
          [](vl::node::Node& n, const std::string& token, const std::string& email, const std::string& password,
             const std::string& role, std::optional<std::string> hospital) {
            auto r = vl::registry::parse_role(role);
            if (!r) throw py::value_error("role must be PROVIDER or OFFICER");
            return n.create_account(token, email, password, *r, std::move(hospital)).account_id;
          },
          py::arg("token"), py::arg("email"), py::arg("password"), py::arg("role"), py::arg("hospital_name") = py::none())
      .def(
          "submit_record",
          [](vl::node::Node& n, const std::string& token, const std::string& aadhaar, const std::string& full_name,
             const std::string& vaccine_name, std::int64_t dose_number, const std::string& date) {
            auto r = n.submit_record(token, {aadhaar, full_name, vaccine_name, dose_number, date});
            return py::make_tuple(r.accepted, r.position);
          },
          py::arg("token"), py::arg("aadhaar"), py::arg("full_name"), py::arg("vaccine_name"), py::arg("dose_number"),
          py::arg("date"))
      .def(
          "produce_block",
          [](vl::node::Node& n, std::optional<std::int64_t> now) -> py::object {
            auto b = n.produce_block(now.value_or(n.now()));
            if (!b) return py::none();
            return header_dict(b->header);
          },
          py::arg("now") = py::none())
      .def("officer_lookup",
           [](const vl::node::Node& n, const std::string& aadhaar, const std::string& token) -> py::object {
             auto r = n.officer_lookup(aadhaar, token);
             if (!r) return py::none();
             py::dict d;
             d["record"] = to_python(r->record.to_value());
             d["verified_at_height"] = r->verified_at_height;
             return d;
           })
      .def("credential_payload", &vl::node::Node::credential_payload)
      .def("verify_payload",
           [](const vl::node::Node& n, const std::string& payload) {
             return std::string(vl::credential::to_string(n.verify_payload(payload)));
           })
      .def("head", [](const vl::node::Node& n) { return header_dict(n.head()); })
      .def_property_readonly("height", &vl::node::Node::height)
      .def_property_readonly("state_root", [](const vl::node::Node& n) { return n.state_root().hex(); })
      .def_property_readonly("credential_pubkey",
                             [](const vl::node::Node& n) { return n.credential_public_key().hex(); })
      .def("rejections", [](const vl::node::Node& n) {
        py::list out;
        for (const auto& r : n.rejections()) out.append(py::make_tuple(to_python(r.tx.to_value()), r.reason));
        return out;
      });
}
