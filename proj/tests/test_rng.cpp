#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "slowfast/parallel.hpp"
#include "slowfast/rng.hpp"

using namespace slowfast;

TEST_CASE("philox4x32-10 known answers") {
  // Reference vectors published with the Random123 library.
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) ==
        PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal streams are addressable and disjoint") {
  NormalStream a(7, 3, StreamTag::slow), b(7, 3, StreamTag::slow);
  std::vector<double> first;
  for (int i = 0; i < 101; ++i) first.push_back(a.next());
  for (int i = 0; i < 101; ++i) CHECK(b.next() == first[i]);
  CHECK(a.position() == 101);

  NormalStream fast(7, 3, StreamTag::fast), other_path(7, 4, StreamTag::slow), other_seed(8, 3, StreamTag::slow);
  int same = 0;
  for (int i = 0; i < 101; ++i) {
    const double f = fast.next(), p = other_path.next(), s = other_seed.next();
    same += (f == first[i]) + (p == first[i]) + (s == first[i]);
  }
  CHECK(same == 0);
}

TEST_CASE("normal draws have standard moments") {
  NormalStream s(12345, 0, StreamTag::auxiliary);
  const int n = 400000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.next();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  // Tolerances are five standard errors of the sample moments.
  CHECK(std::abs(m1) < 5 * std::sqrt(1.0 / n));
  CHECK(std::abs(m2 - 1) < 5 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4 - 3) < 5 * std::sqrt(96.0 / n));
}

TEST_CASE("mix_seed separates salts") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t salt = 0; salt < 1000; ++salt) seen.insert(mix_seed(42, salt));
  CHECK(seen.size() == 1000);
  CHECK(mix_seed(42, 1) == mix_seed(42, 1));
}

TEST_CASE("parallel_for covers every index once and rethrows the lowest failure") {
  for (unsigned w : {1u, 2u, 5u}) {
    std::vector<int> hits(1003, 0);
    parallel_for(hits.size(), w, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
  try {
    parallel_for(100, 4, [](std::size_t i) {
      if (i == 17 || i == 80) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "17");
  }
}
