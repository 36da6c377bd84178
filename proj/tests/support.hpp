#pragma once

#include <aggerr/aggerr.hpp>
#include <oracle/dense_oracle.hpp>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing {

inline std::string dataPath(const std::string& rel) { return std::string(AGGERR_DATA_DIR) + "/" + rel; }

struct Toy {
  aggerr::FirmNetwork net;
  aggerr::EssentialityTable ess;
};

inline Toy loadToy() {
  auto net = aggerr::io::loadFirmNetwork(dataPath("toy/edges.csv"), dataPath("toy/meta.csv"));
  auto ess = aggerr::io::loadEssentiality(dataPath("toy/essentiality.csv"), net.industryLabels());
  return {std::move(net), std::move(ess)};
}

// psi with one firm (by external id) knocked out.
inline std::vector<double> knockOut(const aggerr::FirmNetwork& net, const std::string& id) {
  std::vector<double> psi(net.nodeCount(), 1.0);
  psi[*net.findFirm(id)] = 0.0;
  return psi;
}

struct Instance {
  aggerr::FirmNetwork net;
  oracle::DenseNetwork dense;
};

// Erdos-Renyi style network with integer-valued or continuous weights; every
// industry non-empty.
inline Instance randomInstance(std::size_t n, std::size_t m, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<aggerr::IndustryIndex> ind(n);
  for (std::size_t i = 0; i < n; ++i) ind[i] = i < m ? i : static_cast<std::size_t>(u(rng) * static_cast<double>(m)) % m;
  std::vector<aggerr::Edge> edges;
  oracle::DenseNetwork d{n, m, ind, oracle::zeros(n, n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || u(rng) >= density) continue;
      const double w = 0.1 + 10.0 * u(rng);
      edges.push_back({i, j, w});
      d.w[i][j] = w;
    }
  return {aggerr::FirmNetwork::fromIndices(m, ind, std::move(edges)), std::move(d)};
}

// Random essentiality table with the same content in library and dense form.
inline std::pair<aggerr::EssentialityTable, oracle::DenseGlpf> randomEssentiality(std::size_t m, double pEssential,
                                                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  aggerr::EssentialityTable t(aggerr::InputClass::Essential);
  oracle::DenseGlpf f{false, std::vector<std::vector<bool>>(m, std::vector<bool>(m, true))};
  for (std::size_t p = 0; p < m; ++p)
    for (std::size_t q = 0; q < m; ++q) {
      const bool ess = u(rng) < pEssential;
      f.essential[p][q] = ess;
      t.set(p, q, ess ? aggerr::InputClass::Essential : aggerr::InputClass::NonEssential);
    }
  return {std::move(t), std::move(f)};
}

inline std::vector<double> randomPsi(std::size_t n, double pShock, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> psi(n, 1.0);
  for (auto& p : psi)
    if (u(rng) < pShock) p = u(rng);
  return psi;
}

inline std::filesystem::path scratchDir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("aggerr_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace testing
