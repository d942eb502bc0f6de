#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "foresee/common.hpp"

using namespace foresee;

TEST_CASE("rng stream is stable across runs") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    // splitmix64 reference values for seed 1234567
    Rng r(1234567);
    CHECK(r.next() == 0x599ed017fb08fc85ULL);
}

TEST_CASE("uniform stays in [0,1) and covers the range") {
    Rng r(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("derive_seed decorrelates sub-streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t k = 0; k < 1000; ++k) seen.insert(derive_seed(99, k));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(99, 5) != derive_seed(100, 5));
    CHECK(derive_seed(99, 5) == derive_seed(99, 5));
}

TEST_CASE("sample_without_replacement draws distinct in-range indices") {
    IndexSet pool(100);
    for (std::size_t i = 0; i < 100; ++i) pool[i] = i;
    Rng r(3);
    auto s = sample_without_replacement(pool, 30, r);
    CHECK(s.size() == 30);
    std::set<std::size_t> uniq(s.begin(), s.end());
    CHECK(uniq.size() == 30);
    for (auto i : s) CHECK(i < 100);

    IndexSet ten(10);
    for (std::size_t i = 0; i < 10; ++i) ten[i] = i;
    Rng r4(4);
    auto all = sample_without_replacement(ten, 10, r4);
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(all[i] == i);
    IndexSet five(5);
    CHECK_THROWS_AS(sample_without_replacement(five, 6, r), PreconditionError);
}

TEST_CASE("shuffle permutes without loss") {
    std::vector<int> v{1, 2, 3, 4, 5, 6, 7};
    Rng r(11);
    shuffle(v, r);
    std::vector<int> s = v;
    std::sort(s.begin(), s.end());
    CHECK(s == std::vector<int>{1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("parallel_for matches serial order-independent accumulation") {
    std::vector<int> out(1000, 0);
    parallel_for(1000, 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i % 97); });
    for (std::size_t i = 0; i < 1000; ++i) CHECK(out[i] == static_cast<int>(i * i % 97));
}

TEST_CASE("parallel_for propagates the first worker exception") {
    CHECK_THROWS_AS(
        parallel_for(100, 4,
                     [](std::size_t i) {
                         if (i == 50) throw ValidationError("boom");
                     }),
        ValidationError);
}

TEST_CASE("sha256 matches FIPS 180-4 vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("matrix indexing is row major") {
    Matrix m(2, 3);
    m.at(0, 0) = 1;
    m.at(0, 2) = 3;
    m.at(1, 1) = 5;
    CHECK(m.data[0] == 1);
    CHECK(m.data[2] == 3);
    CHECK(m.data[4] == 5);
    CHECK(m.row(1)[1] == 5);
}
