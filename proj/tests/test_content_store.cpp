#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "credetect/content_store.hpp"
#include "credetect/fingerprint.hpp"
#include "credetect/rng.hpp"
#include "test_util.hpp"

using namespace credetect;
using credetect::testing::TempDir;

namespace {

Bytes random_blob(DeterministicRng& rng, std::size_t n) {
  Bytes b(n);
  rng.fill(b);
  return b;
}

}  // namespace

TEST(ContentStore, PutGetRoundTrip) {
  TempDir dir("store");
  ContentStore store(dir.path());
  const Bytes b = to_bytes("hello blob");
  const auto a = store.put(b, 3);
  EXPECT_EQ(store.get(a), b);
  EXPECT_TRUE(store.contains(a));
  ASSERT_EQ(store.entries().size(), 1u);
  EXPECT_EQ(store.entries()[0].stored_at, 3u);
  EXPECT_EQ(store.entries()[0].size, b.size());
}

TEST(ContentStore, DeduplicatesIdenticalBytes) {
  TempDir dir("store");
  ContentStore store(dir.path());
  const Bytes b = to_bytes("same bytes");
  const auto a1 = store.put(b, 1);
  const auto a2 = store.put(b, 9);
  EXPECT_EQ(a1, a2);
  EXPECT_EQ(store.blob_count(), 1u);
  EXPECT_EQ(store.stored_bytes(), b.size());
  EXPECT_EQ(store.entries()[0].stored_at, 1u);  // first insertion wins
}

TEST(ContentStore, DistinctBytesDistinctAddresses) {
  TempDir dir("store");
  ContentStore store(dir.path());
  EXPECT_NE(store.put(to_bytes("b1")), store.put(to_bytes("b2")));
  EXPECT_EQ(store.blob_count(), 2u);
}

TEST(ContentStore, AddressIsIndependentDigestOfBytes) {
  TempDir dir("store");
  ContentStore store(dir.path());
  const std::string v = "abc";
  const auto a = store.put(as_bytes(v));
  EXPECT_EQ(a.bytes, compute_hash_id(v).bytes);
  EXPECT_EQ(a.hex(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(store.blob_path(a), dir.path() / a.hex());
}

TEST(ContentStore, Errors) {
  TempDir dir("store");
  ContentStore store(dir.path(), 10);
  EXPECT_CODE(store.put(Bytes{}), EmptyBlob);
  EXPECT_CODE(store.get(content_address(as_bytes(std::string_view("never stored")))), NotFound);
  store.put(to_bytes("123456"));
  EXPECT_CODE(store.put(to_bytes("abcdefg")), StorageFull);
  EXPECT_NO_THROW(store.put(to_bytes("abcd")));  // exactly fills capacity
  EXPECT_CODE(store.put(to_bytes("x")), StorageFull);
  // Dedup of a stored blob never counts against capacity.
  EXPECT_NO_THROW(store.put(to_bytes("abcd")));
}

TEST(ContentStore, OutOfBandCorruptionIsDetected) {
  TempDir dir("store");
  ContentStore store(dir.path());
  const auto a = store.put(to_bytes("original content of the blob"));
  {
    std::fstream f(store.blob_path(a), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(5);
    f.put('X');
  }
  EXPECT_CODE(store.get(a), IntegrityViolation);
}

TEST(ContentStore, MissingFileIsIntegrityViolation) {
  TempDir dir("store");
  ContentStore store(dir.path());
  const auto a = store.put(to_bytes("to be deleted"));
  std::filesystem::remove(store.blob_path(a));
  EXPECT_CODE(store.get(a), IntegrityViolation);
}

TEST(ContentStore, ReopenLoadsIndex) {
  TempDir dir("store");
  DeterministicRng rng(1);
  std::vector<std::pair<AddressHash, Bytes>> stored;
  {
    ContentStore store(dir.path());
    for (int i = 0; i < 10; ++i) {
      auto b = random_blob(rng, 1 + rng.uniform(500));
      stored.emplace_back(store.put(b, i), b);
    }
  }
  ContentStore reopened(dir.path());
  EXPECT_EQ(reopened.blob_count(), 10u);
  const auto entries = reopened.entries();
  for (std::size_t i = 0; i < stored.size(); ++i) {
    EXPECT_EQ(entries[i].address, stored[i].first);
    EXPECT_EQ(entries[i].stored_at, i);
    EXPECT_EQ(reopened.get(stored[i].first), stored[i].second);
  }
}

TEST(ContentStore, BadIndexIsParseError) {
  TempDir dir("store");
  std::ofstream(dir / "index.json") << "{not json";
  EXPECT_CODE(ContentStore{dir.path()}, ParseError);
}

TEST(ContentStore, ConcurrentPutsAndGets) {
  TempDir dir("store");
  ContentStore store(dir.path());
  constexpr int kThreads = 4, kPer = 40;
  std::vector<std::thread> threads;
  std::vector<std::vector<std::pair<AddressHash, Bytes>>> results(kThreads);
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      DeterministicRng rng(100 + t % 2);  // two pairs of threads write identical blobs
      for (int i = 0; i < kPer; ++i) {
        auto b = random_blob(rng, 1 + rng.uniform(300));
        const auto a = store.put(b);
        results[t].emplace_back(a, std::move(b));
        store.get(a);
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(store.blob_count(), 2u * kPer);
  for (const auto& r : results)
    for (const auto& [a, b] : r) EXPECT_EQ(store.get(a), b);
}
