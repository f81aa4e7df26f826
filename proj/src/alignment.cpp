#include "dmphy/alignment.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "dmphy/rng.hpp"

namespace dmphy {

int Alignment::row_of(const std::string& label) const {
  for (int i = 0; i < tip_count(); ++i)
    if (labels[i] == label) return i;
  throw ValidationError("alignment has no sequence labeled '" + label + "'");
}

namespace {

Alignment identity_compression(Alignment a) {
  a.patterns = a.sites;
  a.weights = Eigen::VectorXi::Ones(a.sites.cols());
  return a;
}

}  // namespace

Alignment parse_fasta(std::istream& in) {
  std::vector<std::string> labels;
  std::vector<std::string> seqs;
  std::unordered_set<std::string> seen;
  std::string line;
  bool in_record = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      std::string label = line.substr(1, line.find_first_of(" \t", 1) - 1);
      if (label.empty()) throw ParseError("FASTA record with empty label");
      if (!seen.insert(label).second)
        throw ParseError("duplicate FASTA label '" + label + "'");
      labels.push_back(std::move(label));
      seqs.emplace_back();
      in_record = true;
    } else {
      if (!in_record) throw ParseError("FASTA sequence data before first '>' header");
      seqs.back() += line;
    }
  }
  if (labels.empty()) throw ParseError("empty FASTA input");

  const std::size_t length = seqs[0].size();
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs[i].size() != length)
      throw ValidationError("FASTA record '" + labels[i] + "' has length " +
                            std::to_string(seqs[i].size()) + ", expected " +
                            std::to_string(length));
    if (seqs[i].empty())
      throw ValidationError("FASTA record '" + labels[i] + "' is empty");
  }

  Alignment a;
  a.labels = std::move(labels);
  a.sites.resize(static_cast<int>(seqs.size()), static_cast<int>(length));
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    for (std::size_t s = 0; s < length; ++s) {
      try {
        a.sites(static_cast<int>(i), static_cast<int>(s)) =
            NucleotideVector::from_iupac(seqs[i][s]).mask();
      } catch (const ParseError&) {
        throw ParseError(std::string("invalid nucleotide code '") + seqs[i][s] +
                         "' in record '" + a.labels[i] + "' at column " +
                         std::to_string(s + 1));
      }
    }
  }
  return identity_compression(std::move(a));
}

Alignment parse_fasta_string(const std::string& text) {
  std::istringstream in(text);
  return parse_fasta(in);
}

Alignment parse_fasta_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open FASTA file: " + path);
  return parse_fasta(in);
}

void write_fasta(const Alignment& a, std::ostream& out) {
  for (int i = 0; i < a.tip_count(); ++i) {
    out << '>' << a.labels[i] << '\n';
    for (int s = 0; s < a.site_count(); ++s) {
      out << NucleotideVector(a.sites(i, s)).to_iupac();
      if ((s + 1) % 70 == 0 && s + 1 < a.site_count()) out << '\n';
    }
    out << '\n';
  }
}

std::string write_fasta_string(const Alignment& a) {
  std::ostringstream out;
  write_fasta(a, out);
  return out.str();
}

Alignment compress_patterns(const Alignment& a) {
  const int n = a.tip_count();
  const int s_count = a.site_count();
  std::map<std::vector<std::uint8_t>, int> index_of;
  std::vector<std::vector<std::uint8_t>> columns;
  std::vector<int> weights;
  for (int s = 0; s < s_count; ++s) {
    std::vector<std::uint8_t> col(n);
    for (int i = 0; i < n; ++i) col[i] = a.sites(i, s);
    auto [it, inserted] = index_of.emplace(std::move(col), static_cast<int>(columns.size()));
    if (inserted) {
      columns.push_back(it->first);
      weights.push_back(1);
    } else {
      ++weights[it->second];
    }
  }

  Alignment out = a;
  out.patterns.resize(n, static_cast<int>(columns.size()));
  out.weights.resize(static_cast<int>(columns.size()));
  for (std::size_t p = 0; p < columns.size(); ++p) {
    for (int i = 0; i < n; ++i) out.patterns(i, static_cast<int>(p)) = columns[p][i];
    out.weights(static_cast<int>(p)) = weights[p];
  }
  return out;
}

Alignment bootstrap_columns(const Alignment& a, std::uint64_t seed) {
  if (a.site_count() < 1) throw ValidationError("bootstrap_columns: empty alignment");
  Rng rng(seed);
  Alignment out;
  out.labels = a.labels;
  out.sites.resize(a.tip_count(), a.site_count());
  for (int s = 0; s < a.site_count(); ++s) {
    const int src = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(a.site_count())));
    out.sites.col(s) = a.sites.col(src);
  }
  return identity_compression(std::move(out));
}

}  // namespace dmphy
