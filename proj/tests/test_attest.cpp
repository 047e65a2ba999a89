#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qdna/attest.hpp"
#include "qdna/circuits.hpp"

using namespace qdna;

namespace {

std::array<CountsTable, 4> run_chsh(const NamedCircuit& base, const DeviceProfile& profile,
                                    std::uint64_t shots, Seed seed) {
  auto settings = build_chsh_settings(base);
  std::array<CountsTable, 4> out;
  for (int i = 0; i < 4; ++i) out[i] = execute_circuit(settings[i], profile, shots, seed);
  return out;
}

}  // namespace

TEST_CASE("correlation_E on exact tables") {
  CountsTable t;
  t.counts = {{"00", 1024}};
  t.shots = 1024;
  CHECK(correlation_E(t) == 1.0);

  t.counts = {{"01", 512}, {"10", 512}};
  CHECK(correlation_E(t) == -1.0);

  t.counts = {{"00", 250}, {"11", 250}, {"01", 250}, {"10", 250}};
  t.shots = 1000;
  CHECK(correlation_E(t) == 0.0);

  t.counts = {{"000", 10}};
  t.shots = 10;
  CHECK_THROWS(correlation_E(t));
}

TEST_CASE("chsh_S algebra") {
  CHECK(chsh_S(1, 1, 1, -1) == 4.0);
  CHECK(chsh_S(0, 0, 0, 0) == 0.0);
  const double r = 1.0 / std::numbers::sqrt2;
  CHECK(std::abs(chsh_S(r, r, r, -r) - 2.0 * std::numbers::sqrt2) < 1e-12);
  CHECK_THROWS(chsh_S(1.5, 0, 0, 0));
}

TEST_CASE("noiseless Bell attestation reaches the Tsirelson value") {
  auto profile = DeviceProfile::noiseless("dev", 2);
  auto base = build_circuit("chsh_bell", 2, Seed{1});
  auto ev = attest_session(run_chsh(base, profile, 10000, Seed{2}));
  double sigma = chsh_sigma(ev);
  CHECK(ev.S > 2.0 * std::numbers::sqrt2 - 3.0 * sigma);
  CHECK(ev.S < 2.0 * std::numbers::sqrt2 + 3.0 * sigma);
  CHECK(ev.pass);
}

TEST_CASE("product state control stays at or below the classical bound") {
  auto profile = DeviceProfile::noiseless("dev", 2);
  NamedCircuit product;
  product.circuit_id = "chsh_bell";  // Bell prep with the CNOT removed
  product.n_qubits = 2;
  product.gates = {Gate::h(0)};
  product.measured = {0, 1};
  auto ev = attest_session(run_chsh(product, profile, 10000, Seed{5}));
  CHECK(ev.S <= 2.0 + 3.0 * chsh_sigma(ev));
  CHECK_FALSE(ev.pass);
}

TEST_CASE("heavy depolarization fails attestation") {
  DeviceProfile profile = DeviceProfile::noiseless("dev", 2);
  profile.depol_2q = 0.5;
  auto base = build_circuit("chsh_bell", 2, Seed{1});
  auto ev = attest_session(run_chsh(base, profile, 4000, Seed{3}));
  CHECK(ev.S < 2.0);
  CHECK_FALSE(ev.pass);
}

TEST_CASE("S decreases monotonically in depol_2q on seed-averaged means") {
  auto base = build_circuit("chsh_bell", 2, Seed{1});
  double prev_mean = 5.0;
  for (double depol : {0.0, 0.05, 0.1, 0.2}) {
    DeviceProfile profile = DeviceProfile::noiseless("dev", 2);
    profile.depol_2q = depol;
    double mean = 0.0;
    for (std::uint64_t s = 1; s <= 10; ++s) {
      mean += attest_session(run_chsh(base, profile, 1024, Seed{s})).S;
    }
    mean /= 10.0;
    CHECK(mean <= prev_mean);
    prev_mean = mean;
  }
}

TEST_CASE("mismatched shot counts are rejected") {
  std::array<CountsTable, 4> tables;
  for (auto& t : tables) {
    t.counts = {{"00", 100}};
    t.shots = 100;
  }
  tables[3].counts = {{"00", 99}};
  tables[3].shots = 99;
  CHECK_THROWS(attest_session(tables));
}
