#include "credetect/protocol.hpp"

#include <algorithm>
#include <initializer_list>

#include "credetect/errors.hpp"

namespace credetect {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

void expect_object(const ordered_json& j, std::initializer_list<std::string_view> required,
                   std::initializer_list<std::string_view> optional, const char* what) {
  if (!j.is_object()) bad(std::string(what) + ": expected an object");
  for (auto key : required)
    if (!j.contains(key)) bad(std::string(what) + ": missing key '" + std::string(key) + "'");
  for (const auto& [key, _] : j.items()) {
    auto known = [&](std::initializer_list<std::string_view> keys) {
      return std::find(keys.begin(), keys.end(), key) != keys.end();
    };
    if (!known(required) && !known(optional)) bad(std::string(what) + ": unexpected key '" + key + "'");
  }
}

std::uint64_t get_unsigned(const ordered_json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) bad(std::string(key) + ": expected a non-negative integer");
  return v.get<std::uint64_t>();
}

Amount get_amount(const ordered_json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) bad(std::string(key) + ": expected an integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
    bad(std::string(key) + ": out of range");
  return v.get<Amount>();
}

std::string get_string(const ordered_json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) bad(std::string(key) + ": expected a string");
  return v.get<std::string>();
}

template <class Tag>
Digest256<Tag> get_digest(const ordered_json& j, const char* key) {
  return Digest256<Tag>::from_hex(get_string(j, key));
}

}  // namespace

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::CompletePiracy: return "CompletePiracy";
    case Verdict::PartialPiracy: return "PartialPiracy";
    case Verdict::Legitimate: return "Legitimate";
  }
  return "?";
}

Verdict verdict_from_string(std::string_view name) {
  for (auto v : {Verdict::CompletePiracy, Verdict::PartialPiracy, Verdict::Legitimate})
    if (to_string(v) == name) return v;
  bad("unknown verdict '" + std::string(name) + "'");
}

bool ResultRecord::well_formed() const noexcept {
  if (serial == 0) return false;
  switch (verdict) {
    case Verdict::CompletePiracy: return hash_id.has_value() && !lshv.has_value();
    case Verdict::PartialPiracy: return lshv.has_value() && !hash_id.has_value();
    case Verdict::Legitimate: return hash_id.has_value() && lshv.has_value();
  }
  return false;
}

std::string_view payload_type(const Payload& p) noexcept {
  static constexpr std::string_view names[] = {"deploy",          "enroll",    "register",
                                               "request_detection", "post_result", "challenge",
                                               "settle",          "transfer"};
  return names[p.index()];
}

ordered_json to_json(const LegalMediaRecord& r) {
  ordered_json j;
  j["serial"] = r.serial;
  j["hash_id"] = r.hash_id.hex();
  j["lshv"] = r.lshv.hex();
  j["qm"] = r.qm.hex();
  return j;
}

LegalMediaRecord legal_record_from_json(const ordered_json& j) {
  expect_object(j, {"serial", "hash_id", "lshv", "qm"}, {}, "legal record");
  LegalMediaRecord r;
  r.serial = get_unsigned(j, "serial");
  r.hash_id = get_digest<HashIdTag>(j, "hash_id");
  r.lshv = SimHashValue::from_hex(get_string(j, "lshv"));
  r.qm = get_digest<AddressTag>(j, "qm");
  return r;
}

ordered_json to_json(const ResultRecord& r) {
  ordered_json j;
  j["verdict"] = std::string(to_string(r.verdict));
  j["serial"] = r.serial;
  if (r.hash_id) j["hash_id"] = r.hash_id->hex();
  if (r.lshv) j["lshv"] = r.lshv->hex();
  j["qm"] = r.qm.hex();
  return j;
}

ResultRecord result_record_from_json(const ordered_json& j) {
  expect_object(j, {"verdict", "serial", "qm"}, {"hash_id", "lshv"}, "result record");
  ResultRecord r;
  r.verdict = verdict_from_string(get_string(j, "verdict"));
  r.serial = get_unsigned(j, "serial");
  if (j.contains("hash_id")) r.hash_id = get_digest<HashIdTag>(j, "hash_id");
  if (j.contains("lshv")) r.lshv = SimHashValue::from_hex(get_string(j, "lshv"));
  r.qm = get_digest<AddressTag>(j, "qm");
  return r;
}

namespace {

struct PayloadWriter {
  ordered_json& j;

  void operator()(const DeployPayload& p) {
    j["ca_identity"] = p.ca_identity;
    j["ca_public_key"] = p.ca_public_key.to_base64();
    j["detection_agency"] = p.detection_agency;
    j["theta"] = p.theta;
    j["timeout_ticks"] = p.timeout_ticks;
    ordered_json alloc = ordered_json::object();
    for (const auto& [who, amount] : p.allocations) alloc[who] = amount;
    j["allocations"] = std::move(alloc);
  }
  void operator()(const EnrollPayload& p) { j["certificate"] = p.certificate.to_json(); }
  void operator()(const RegisterPayload& p) {
    j["hash_id"] = p.hash_id.hex();
    j["lshv"] = p.lshv.hex();
    j["qm"] = p.qm.hex();
  }
  void operator()(const RequestDetectionPayload& p) {
    j["q"] = p.q.hex();
    j["fee"] = p.fee;
  }
  void operator()(const PostResultPayload& p) {
    j["task_id"] = p.task_id;
    j["record"] = to_json(p.record);
    j["deposit"] = p.deposit;
  }
  void operator()(const ChallengePayload& p) {
    j["task_id"] = p.task_id;
    j["evidence"] = {{"n_prime", p.evidence.n_prime}, {"n", p.evidence.n}};
  }
  void operator()(const SettlePayload& p) { j["task_id"] = p.task_id; }
  void operator()(const TransferPayload& p) {
    j["to"] = p.to;
    j["amount"] = p.amount;
  }
};

}  // namespace

ordered_json to_json(const Payload& p) {
  ordered_json j;
  j["type"] = std::string(payload_type(p));
  std::visit(PayloadWriter{j}, p);
  return j;
}

Payload payload_from_json(const ordered_json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) bad("payload: missing type");
  const std::string type = j["type"].get<std::string>();
  try {
    if (type == "deploy") {
      expect_object(j, {"type", "ca_identity", "ca_public_key", "detection_agency", "theta", "timeout_ticks", "allocations"},
                    {}, "deploy");
      DeployPayload p;
      p.ca_identity = get_string(j, "ca_identity");
      p.ca_public_key = PublicKey::from_base64(get_string(j, "ca_public_key"));
      p.detection_agency = get_string(j, "detection_agency");
      const auto theta = get_unsigned(j, "theta");
      if (theta > 64) bad("deploy: theta above 64");
      p.theta = static_cast<unsigned>(theta);
      p.timeout_ticks = get_unsigned(j, "timeout_ticks");
      const auto& alloc = j.at("allocations");
      if (!alloc.is_object()) bad("deploy: allocations must be an object");
      for (const auto& [who, _] : alloc.items()) p.allocations[who] = get_amount(alloc, who.c_str());
      return p;
    }
    if (type == "enroll") {
      expect_object(j, {"type", "certificate"}, {}, "enroll");
      return EnrollPayload{Certificate::from_json(j.at("certificate"))};
    }
    if (type == "register") {
      expect_object(j, {"type", "hash_id", "lshv", "qm"}, {}, "register");
      return RegisterPayload{get_digest<HashIdTag>(j, "hash_id"), SimHashValue::from_hex(get_string(j, "lshv")),
                             get_digest<AddressTag>(j, "qm")};
    }
    if (type == "request_detection") {
      expect_object(j, {"type", "q", "fee"}, {}, "request_detection");
      return RequestDetectionPayload{get_digest<AddressTag>(j, "q"), get_amount(j, "fee")};
    }
    if (type == "post_result") {
      expect_object(j, {"type", "task_id", "record", "deposit"}, {}, "post_result");
      return PostResultPayload{get_unsigned(j, "task_id"), result_record_from_json(j.at("record")),
                               get_amount(j, "deposit")};
    }
    if (type == "challenge") {
      expect_object(j, {"type", "task_id", "evidence"}, {}, "challenge");
      const auto& ev = j.at("evidence");
      expect_object(ev, {"n_prime", "n"}, {}, "evidence");
      return ChallengePayload{get_unsigned(j, "task_id"), {get_unsigned(ev, "n_prime"), get_unsigned(ev, "n")}};
    }
    if (type == "settle") {
      expect_object(j, {"type", "task_id"}, {}, "settle");
      return SettlePayload{get_unsigned(j, "task_id")};
    }
    if (type == "transfer") {
      expect_object(j, {"type", "to", "amount"}, {}, "transfer");
      return TransferPayload{get_string(j, "to"), get_amount(j, "amount")};
    }
  } catch (const nlohmann::json::exception& e) {
    bad(type + ": " + e.what());
  }
  bad("unknown payload type '" + type + "'");
}

}  // namespace credetect
