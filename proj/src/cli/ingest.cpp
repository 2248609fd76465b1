#include "ofw/cli/ingest.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <string_view>

namespace ofw::cli {

IngestError::IngestError(const std::string& source, std::int64_t line, const std::string& message)
    : ArgumentError(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_int(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty() && std::isfinite(out);
}

std::unique_ptr<std::istream> open(const std::string& path) {
  auto in = std::make_unique<std::ifstream>(path);
  if (!*in) throw Error("cannot open data file '" + path + "'");
  return in;
}

}  // namespace

// ---------------------------------------------------------------------------

McTripletStream::McTripletStream(std::unique_ptr<std::istream> in, std::string source, Index m1, Index m2)
    : in_(std::move(in)), source_(std::move(source)), m1_(m1), m2_(m2) {}

std::optional<Sample> McTripletStream::next() {
  std::string raw;
  while (std::getline(*in_, raw)) {
    ++line_;
    const std::string_view s = trim(raw);
    if (s.empty()) continue;
    const auto c1 = s.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : s.find(',', c1 + 1);
    if (c2 == std::string_view::npos || s.find(',', c2 + 1) != std::string_view::npos) {
      throw IngestError(source_, line_, "expected 'k,l,y', got '" + std::string(s) + "'");
    }
    const auto f0 = trim(s.substr(0, c1)), f1 = trim(s.substr(c1 + 1, c2 - c1 - 1)), f2 = trim(s.substr(c2 + 1));
    if (!seen_data_ && f0 == "k" && f1 == "l" && f2 == "y") {
      seen_data_ = true;
      continue;
    }
    seen_data_ = true;
    McSample out;
    long long k = 0, l = 0;
    if (!parse_int(f0, k)) throw IngestError(source_, line_, "row index '" + std::string(f0) + "' is not an integer");
    if (!parse_int(f1, l)) throw IngestError(source_, line_, "column index '" + std::string(f1) + "' is not an integer");
    if (!parse_double(f2, out.y)) throw IngestError(source_, line_, "value '" + std::string(f2) + "' is not a finite number");
    if (k < 0 || k >= m1_) {
      throw IngestError(source_, line_, "row index " + std::to_string(k) + " outside [0, " + std::to_string(m1_) + ")");
    }
    if (l < 0 || l >= m2_) {
      throw IngestError(source_, line_, "column index " + std::to_string(l) + " outside [0, " + std::to_string(m2_) + ")");
    }
    out.k = static_cast<Index>(k);
    out.l = static_cast<Index>(l);
    return Sample{out};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::optional<LabeledVector> parse_labeled_line(const std::string& line, const std::string& source,
                                                std::int64_t line_no, std::optional<Index> dim) {
  std::string_view s = trim(line);
  if (s.empty() || s.front() == '#') return std::nullopt;

  auto token = [&s]() {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) {
      s = {};
      return std::string_view{};
    }
    s.remove_prefix(b);
    const auto e = s.find_first_of(" \t");
    std::string_view t = s.substr(0, e);
    s = e == std::string_view::npos ? std::string_view{} : s.substr(e);
    return t;
  };

  const std::string_view label_tok = token();
  double label = 0.0;
  if (!parse_double(label_tok, label) || (label != -1.0 && label != 0.0 && label != 1.0)) {
    throw IngestError(source, line_no, "label '" + std::string(label_tok) + "' is not -1, 0 or +1");
  }

  std::vector<std::pair<Index, double>> entries;
  std::set<Index> seen;
  Index max_index = 0;
  for (std::string_view t = token(); !t.empty(); t = token()) {
    const auto colon = t.find(':');
    long long idx = 0;
    double val = 0.0;
    if (colon == std::string_view::npos || !parse_int(t.substr(0, colon), idx) ||
        !parse_double(t.substr(colon + 1), val)) {
      throw IngestError(source, line_no, "malformed feature '" + std::string(t) + "' (expected index:value)");
    }
    if (idx < 1) throw IngestError(source, line_no, "feature index " + std::to_string(idx) + " must be >= 1");
    if (dim && idx > *dim) {
      throw IngestError(source, line_no, "feature index " + std::to_string(idx) + " exceeds dimension " + std::to_string(*dim));
    }
    if (!seen.insert(static_cast<Index>(idx)).second) {
      throw IngestError(source, line_no, "feature index " + std::to_string(idx) + " repeated");
    }
    max_index = std::max<Index>(max_index, static_cast<Index>(idx));
    entries.emplace_back(static_cast<Index>(idx - 1), val);
  }

  SparseVector x(dim ? *dim : std::max<Index>(max_index, 1));
  x.reserve(static_cast<Index>(entries.size()));
  for (const auto& [i, v] : entries) x.coeffRef(i) = v;
  return LabeledVector{std::move(x), label > 0.0 ? 1 : -1};
}

LabeledSparseStream::LabeledSparseStream(std::unique_ptr<std::istream> in, std::string source, Index dim)
    : in_(std::move(in)), source_(std::move(source)), dim_(dim) {
  if (dim_ < 1) throw ArgumentError("labeled-sparse dimension must be >= 1");
}

std::optional<Sample> LabeledSparseStream::next() {
  std::string raw;
  while (std::getline(*in_, raw)) {
    ++line_;
    if (auto lv = parse_labeled_line(raw, source_, line_, dim_)) return Sample{std::move(*lv)};
  }
  return std::nullopt;
}

Index infer_dim(std::istream& in, const std::string& source) {
  std::string raw;
  std::int64_t line = 0;
  Index dim = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto lv = parse_labeled_line(raw, source, line, std::nullopt)) {
      const auto& x = std::get<SparseVector>(lv->x);
      for (SparseVector::InnerIterator it(x); it; ++it) dim = std::max<Index>(dim, it.index() + 1);
    }
  }
  return std::max<Index>(dim, 1);
}

std::unique_ptr<McTripletStream> ingest_mc_triplets(const std::string& path, Index m1, Index m2) {
  return std::make_unique<McTripletStream>(open(path), path, m1, m2);
}

std::unique_ptr<LabeledSparseStream> ingest_labeled_sparse(const std::string& path, std::optional<Index> dim) {
  if (!dim) {
    auto scan = open(path);
    dim = infer_dim(*scan, path);
  }
  return std::make_unique<LabeledSparseStream>(open(path), path, *dim);
}

// ---------------------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_mc_triplets(std::ostream& out, const std::vector<McSample>& samples, bool header) {
  if (header) out << "k,l,y\n";
  for (const auto& s : samples) out << s.k << ',' << s.l << ',' << num(s.y) << '\n';
}

void write_labeled_sparse(std::ostream& out, const std::vector<LabeledVector>& samples) {
  for (const auto& s : samples) {
    out << (s.y > 0 ? "+1" : "-1");
    if (const auto* sp = std::get_if<SparseVector>(&s.x)) {
      for (SparseVector::InnerIterator it(*sp); it; ++it) out << ' ' << it.index() + 1 << ':' << num(it.value());
    } else {
      const auto& d = std::get<Eigen::VectorXd>(s.x);
      for (Index i = 0; i < d.size(); ++i)
        if (d(i) != 0.0) out << ' ' << i + 1 << ':' << num(d(i));
    }
    out << '\n';
  }
}

}  // namespace ofw::cli
