#pragma once

#include <aggerr/csv.hpp>
#include <aggerr/network.hpp>
#include <aggerr/propagation.hpp>
#include <aggerr/shock.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace aggerr::io {

inline constexpr const char* kResidualLabel = "NA";

inline void writeText(const std::string& path, const std::string& text) {
  auto out = csv::openForWrite(path);
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

// Integer-looking labels compare numerically, everything else
// lexicographically after them.
inline bool naturalLess(const std::string& a, const std::string& b) {
  auto asInt = [](const std::string& s) -> std::optional<long long> {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
  };
  auto x = asInt(a), y = asInt(b);
  if (x && y) return *x != *y ? *x < *y : a < b;
  if (x.has_value() != y.has_value()) return x.has_value();
  return a < b;
}

struct NetworkFiles {
  std::string edges;
  std::string meta;
};

// Reads `firm,<labelColumn>` metadata and `supplier,buyer,weight` edges.
// Firms keep their metadata order; duplicate edges are summed; firms with a
// blank label go to the residual industry, which is ordered last.
inline FirmNetwork loadFirmNetwork(const std::string& edgeFile, const std::string& metaFile,
                                   const std::string& labelColumn = "industry") {
  const csv::Table meta = csv::read(metaFile);
  const std::size_t cFirm = meta.column("firm");
  const std::size_t cLabel = meta.column(labelColumn);

  std::vector<std::string> ids;
  std::vector<std::string> rawLabel;
  std::unordered_map<std::string, NodeIndex> index;
  for (const auto& row : meta.rows) {
    const std::string& id = row.cells[cFirm];
    if (id.empty()) throw ParseError(metaFile, row.line, "empty firm id");
    if (!index.emplace(id, ids.size()).second) throw ParseError(metaFile, row.line, "duplicate firm id '" + id + "'");
    ids.push_back(id);
    rawLabel.push_back(row.cells[cLabel]);
  }

  std::vector<std::string> labels;
  bool hasResidual = false;
  for (const auto& l : rawLabel) {
    if (l.empty() || l == kResidualLabel)
      hasResidual = true;
    else
      labels.push_back(l);
  }
  std::sort(labels.begin(), labels.end(), naturalLess);
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::optional<IndustryIndex> residual;
  if (hasResidual) {
    residual = labels.size();
    labels.push_back(kResidualLabel);
  }
  std::unordered_map<std::string, IndustryIndex> labelIndex;
  for (IndustryIndex k = 0; k < labels.size(); ++k) labelIndex.emplace(labels[k], k);
  std::vector<IndustryIndex> industry(ids.size());
  for (NodeIndex i = 0; i < ids.size(); ++i)
    industry[i] = rawLabel[i].empty() ? *residual : labelIndex.at(rawLabel[i]);

  const csv::Table et = csv::read(edgeFile);
  const std::size_t cs = et.column("supplier"), cb = et.column("buyer"), cw = et.column("weight");
  std::map<std::pair<NodeIndex, NodeIndex>, double> summed;
  for (const auto& row : et.rows) {
    auto lookup = [&](const std::string& id) {
      auto it = index.find(id);
      if (it == index.end()) throw ParseError(edgeFile, row.line, "firm '" + id + "' is not in the metadata");
      return it->second;
    };
    const NodeIndex s = lookup(row.cells[cs]);
    const NodeIndex b = lookup(row.cells[cb]);
    const double w = csv::parseDouble(row.cells[cw], edgeFile, row.line);
    if (!(w > 0.0) || !std::isfinite(w))
      throw ParseError(edgeFile, row.line, "weight must be positive, got '" + row.cells[cw] + "'");
    if (s == b) throw ParseError(edgeFile, row.line, "self-loop on firm '" + row.cells[cs] + "'");
    summed[{s, b}] += w;
  }
  std::vector<Edge> edges;
  edges.reserve(summed.size());
  for (const auto& [key, w] : summed) edges.push_back({key.first, key.second, w});
  return FirmNetwork(std::move(ids), std::move(labels), std::move(industry), std::move(edges), residual);
}

inline FirmNetwork loadFirmNetwork(const NetworkFiles& files, const std::string& labelColumn = "industry") {
  return loadFirmNetwork(files.edges, files.meta, labelColumn);
}

inline std::string industryCell(const FirmNetwork& net, NodeIndex i) {
  const IndustryIndex k = net.industryOf(i);
  return net.residualIndustry() == k ? std::string() : net.industryLabel(k);
}

// Canonical form: metadata in firm order, edges sorted by (supplier, buyer) index.
inline void writeFirmNetwork(const FirmNetwork& net, const std::string& edgeFile, const std::string& metaFile) {
  std::string meta = "firm,industry\n";
  for (NodeIndex i = 0; i < net.nodeCount(); ++i) {
    csv::RecordWriter w;
    w << net.firmId(i) << industryCell(net, i);
    meta += w.str() + "\n";
  }
  std::string edges = "supplier,buyer,weight\n";
  for (const Edge& e : net.edges()) {
    csv::RecordWriter w;
    w << net.firmId(e.supplier) << net.firmId(e.buyer) << e.weight;
    edges += w.str() + "\n";
  }
  writeText(metaFile, meta);
  writeText(edgeFile, edges);
}

inline std::string industryMatrixCsv(const IndustryNetwork& z) {
  csv::RecordWriter header;
  header << "industry";
  for (const auto& l : z.labels()) header << l;
  std::string out = header.str() + "\n";
  for (IndustryIndex k = 0; k < z.industryCount(); ++k) {
    csv::RecordWriter w;
    w << z.labels()[k];
    for (IndustryIndex l = 0; l < z.industryCount(); ++l) w << z.flow(k, l);
    out += w.str() + "\n";
  }
  return out;
}

inline void writeIndustryNetwork(const IndustryNetwork& z, const std::string& path) {
  writeText(path, industryMatrixCsv(z));
}

inline std::vector<EmploymentRecord> loadEmployment(const std::string& path) {
  const csv::Table t = csv::read(path);
  const std::size_t cf = t.column("firm"), cj = t.column("e_jan"), cm = t.column("e_may");
  std::vector<EmploymentRecord> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    EmploymentRecord r;
    r.firm = row.cells[cf];
    if (!row.cells[cj].empty()) r.eJan = csv::parseInt(row.cells[cj], path, row.line);
    if (!row.cells[cm].empty()) r.eMay = csv::parseInt(row.cells[cm], path, row.line);
    if ((r.eJan && *r.eJan < 0) || (r.eMay && *r.eMay < 0))
      throw ParseError(path, row.line, "negative employment count");
    out.push_back(std::move(r));
  }
  return out;
}

// `firm,psi`; firms not listed keep full capacity.
inline FirmShock loadShock(const std::string& path, const FirmNetwork& net) {
  const csv::Table t = csv::read(path);
  const std::size_t cf = t.column("firm"), cp = t.column("psi");
  std::vector<double> psi(net.nodeCount(), 1.0);
  std::vector<bool> seen(net.nodeCount(), false);
  for (const auto& row : t.rows) {
    auto i = net.findFirm(row.cells[cf]);
    if (!i) throw ParseError(path, row.line, "unknown firm '" + row.cells[cf] + "'");
    if (seen[*i]) throw ParseError(path, row.line, "duplicate firm '" + row.cells[cf] + "'");
    seen[*i] = true;
    const double v = csv::parseDouble(row.cells[cp], path, row.line);
    if (!(v >= 0.0 && v <= 1.0)) throw ParseError(path, row.line, "psi outside [0,1]");
    psi[*i] = v;
  }
  return FirmShock::fromPsi(std::move(psi));
}

inline std::string shockCsv(const FirmNetwork& net, const std::vector<double>& psi) {
  std::string out = "firm,psi\n";
  for (NodeIndex i = 0; i < net.nodeCount(); ++i) {
    csv::RecordWriter w;
    w << net.firmId(i) << psi.at(i);
    out += w.str() + "\n";
  }
  return out;
}

inline void writeShock(const std::string& path, const FirmNetwork& net, const std::vector<double>& psi) {
  writeText(path, shockCsv(net, psi));
}

inline InputClass parseInputClass(const std::string& s, const std::string& source, std::size_t line) {
  if (s == "essential") return InputClass::Essential;
  if (s == "non_essential") return InputClass::NonEssential;
  throw ParseError(source, line, "class must be essential or non_essential, got '" + s + "'");
}

// `producer_industry,input_industry,class`. Rows naming labels that do not
// occur in `labels` are skipped.
inline EssentialityTable loadEssentiality(const std::string& path, const std::vector<std::string>& labels,
                                          InputClass defaultClass = InputClass::Essential) {
  std::unordered_map<std::string, IndustryIndex> index;
  for (IndustryIndex k = 0; k < labels.size(); ++k) index.emplace(labels[k], k);
  const csv::Table t = csv::read(path);
  const std::size_t cp = t.column("producer_industry"), ci = t.column("input_industry"), cc = t.column("class");
  EssentialityTable table(defaultClass);
  for (const auto& row : t.rows) {
    const InputClass c = parseInputClass(row.cells[cc], path, row.line);
    auto p = index.find(row.cells[cp]);
    auto q = index.find(row.cells[ci]);
    if (p == index.end() || q == index.end()) continue;
    table.set(p->second, q->second, c);
  }
  return table;
}

inline std::string propagationCsv(const FirmNetwork& net, const PropagationResult& r) {
  std::string out = "firm,h_down,h_up,h_final\n";
  for (NodeIndex i = 0; i < net.nodeCount(); ++i) {
    csv::RecordWriter w;
    w << net.firmId(i) << r.hDown[i] << r.hUp[i] << r.hFinal[i];
    out += w.str() + "\n";
  }
  return out;
}

inline void writePropagationResult(const std::string& path, const FirmNetwork& net, const PropagationResult& r) {
  writeText(path, propagationCsv(net, r));
}

}  // namespace aggerr::io
