#include <gtest/gtest.h>

#include "credetect/protocol.hpp"
#include "test_util.hpp"

using namespace credetect;

namespace {

HashId hid(std::uint8_t fill) {
  HashId h;
  h.bytes.fill(fill);
  return h;
}

AddressHash addr(std::uint8_t fill) {
  AddressHash a;
  a.bytes.fill(fill);
  return a;
}

std::vector<Payload> sample_payloads() {
  const auto ca = CertificateAuthority("CA", KeyPair::from_seed(1));
  DeployPayload d{"CA", ca.public_key(), "DA", 9, 12, {{"DA", 1000}, {"MP1", 100}}};
  ResultRecord legit{Verdict::Legitimate, 4, hid(1), SimHashValue{77}, addr(2)};
  ResultRecord complete{Verdict::CompletePiracy, 2, hid(1), std::nullopt, addr(2)};
  ResultRecord partial{Verdict::PartialPiracy, 3, std::nullopt, SimHashValue{5}, addr(2)};
  return {d,
          EnrollPayload{ca.issue("MP1", KeyPair::from_seed(2).public_key)},
          RegisterPayload{hid(3), SimHashValue{0xdeadbeef}, addr(4)},
          RequestDetectionPayload{addr(5), 10},
          PostResultPayload{1, legit, 50},
          PostResultPayload{2, complete, 50},
          PostResultPayload{3, partial, 50},
          ChallengePayload{1, {4, 1}},
          SettlePayload{7},
          TransferPayload{"MP2", 25}};
}

}  // namespace

TEST(Verdict, Names) {
  for (auto v : {Verdict::CompletePiracy, Verdict::PartialPiracy, Verdict::Legitimate})
    EXPECT_EQ(verdict_from_string(to_string(v)), v);
  EXPECT_CODE(verdict_from_string("Maybe"), ParseError);
}

TEST(ResultRecord, ShapeRules) {
  const ResultRecord complete{Verdict::CompletePiracy, 3, hid(1), std::nullopt, addr(2)};
  const ResultRecord partial{Verdict::PartialPiracy, 7, std::nullopt, SimHashValue{1}, addr(2)};
  const ResultRecord legit{Verdict::Legitimate, 9, hid(1), SimHashValue{1}, addr(2)};
  EXPECT_TRUE(complete.well_formed());
  EXPECT_TRUE(partial.well_formed());
  EXPECT_TRUE(legit.well_formed());

  auto p = partial;
  p.lshv.reset();
  EXPECT_FALSE(p.well_formed());  // PartialPiracy missing lshv
  auto c = complete;
  c.lshv = SimHashValue{1};
  EXPECT_FALSE(c.well_formed());
  auto l = legit;
  l.hash_id.reset();
  EXPECT_FALSE(l.well_formed());
  auto z = complete;
  z.serial = 0;
  EXPECT_FALSE(z.well_formed());
}

TEST(PayloadJson, RoundTripEveryType) {
  for (const auto& p : sample_payloads()) {
    const auto j = to_json(p);
    EXPECT_EQ(j.at("type").get<std::string>(), payload_type(p));
    const auto back = payload_from_json(j);
    EXPECT_EQ(back, p) << j.dump();
    EXPECT_EQ(to_json(back).dump(), j.dump());  // canonical
  }
}

TEST(PayloadJson, StrictKeys) {
  for (const auto& p : sample_payloads()) {
    auto extra = to_json(p);
    extra["surprise"] = 1;
    EXPECT_CODE(payload_from_json(extra), ParseError);
    const auto full = to_json(p);
    for (const auto& [key, _] : full.items()) {
      auto missing = to_json(p);
      missing.erase(key);
      EXPECT_CODE(payload_from_json(missing), ParseError);
    }
  }
  EXPECT_CODE(payload_from_json(nlohmann::ordered_json{{"type", "mint"}}), ParseError);
  EXPECT_CODE(payload_from_json(nlohmann::ordered_json::array()), ParseError);
}

TEST(PayloadJson, OptionalFieldsOmitted) {
  const ResultRecord partial{Verdict::PartialPiracy, 3, std::nullopt, SimHashValue{5}, addr(2)};
  const auto j = to_json(partial);
  EXPECT_FALSE(j.contains("hash_id"));
  EXPECT_EQ(result_record_from_json(j), partial);
  const LegalMediaRecord rec{1, hid(1), SimHashValue{2}, addr(3)};
  EXPECT_EQ(legal_record_from_json(to_json(rec)), rec);
}

TEST(PayloadJson, NonCanonicalEncodingsRejected) {
  auto j = to_json(Payload{RegisterPayload{hid(0xab), SimHashValue{0xdeadbeef}, addr(4)}});
  auto upper = j;
  std::string h = upper["hash_id"];
  for (auto& c : h) c = static_cast<char>(std::toupper(c));
  upper["hash_id"] = h;
  EXPECT_CODE(payload_from_json(upper), ParseError);
  auto wrong_type = j;
  wrong_type["lshv"] = 5;
  EXPECT_CODE(payload_from_json(wrong_type), ParseError);
}
