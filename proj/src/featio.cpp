#include "ctxkm/featio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "binio.hpp"

namespace ctxkm {
namespace {

constexpr char kFeatureMagic[4] = {'C', 'T', 'X', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string to_string(Phi0Mode mode) { return mode == Phi0Mode::linear ? "linear" : "hi"; }

Phi0Mode phi0_mode_from_string(const std::string& s) {
  if (s == "linear") return Phi0Mode::linear;
  if (s == "hi") return Phi0Mode::hi;
  fail(errc::config, "unknown phi0 mode '" + s + "' (expected linear or hi)");
}

std::vector<std::string> FeatureFile::image_ids() const {
  std::vector<std::string> ids;
  ids.reserve(images.size());
  for (const auto& img : images) ids.push_back(img.image_id);
  return ids;
}

void LabelMatrix::validate() const {
  if (y.rows() != static_cast<Eigen::Index>(image_ids.size()) ||
      y.cols() != static_cast<Eigen::Index>(concepts.size()))
    fail(errc::shape, "label matrix shape does not match id lists");
  for (Eigen::Index p = 0; p < y.rows(); ++p)
    for (Eigen::Index k = 0; k < y.cols(); ++k)
      if (y(p, k) != 1 && y(p, k) != -1)
        fail(errc::value, "label entries must be -1 or +1");
}

LabelMatrix LabelMatrix::aligned_to(const std::vector<std::string>& ids) const {
  std::unordered_map<std::string, int> row_of;
  row_of.reserve(image_ids.size());
  for (int i = 0; i < static_cast<int>(image_ids.size()); ++i) row_of[image_ids[i]] = i;
  LabelMatrix out;
  out.image_ids = ids;
  out.concepts = concepts;
  out.y.resize(static_cast<Eigen::Index>(ids.size()), y.cols());
  for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
    const auto it = row_of.find(ids[i]);
    if (it == row_of.end()) fail(errc::shape, "no labels for image '" + ids[i] + "'");
    out.y.row(i) = y.row(it->second);
  }
  return out;
}

Eigen::VectorXd phi0_linear(const Eigen::VectorXd& cell) {
  if (!cell.allFinite()) fail(errc::value, "phi0_linear: non-finite feature entry");
  return cell;
}

Eigen::VectorXd phi0_hi(const Eigen::VectorXd& cell, int levels) {
  if (levels <= 0) fail(errc::config, "phi0_hi: quantization levels must be positive");
  if (!cell.allFinite()) fail(errc::value, "phi0_hi: non-finite feature entry");
  const double slot = 1.0 / std::sqrt(static_cast<double>(levels));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(cell.size() * levels);
  for (Eigen::Index i = 0; i < cell.size(); ++i) {
    const double v = cell[i];
    if (v < 0.0 || v > 1.0)
      fail(errc::value, "phi0_hi: entry " + std::to_string(v) + " outside [0,1]");
    const long m = std::lround(v * levels);
    for (long u = 0; u < m; ++u) out[i * levels + u] = slot;
  }
  return out;
}

Eigen::MatrixXd apply_phi0(const Eigen::MatrixXf& raw_cells, Phi0Mode mode, int levels) {
  const Eigen::Index n = raw_cells.cols();
  if (mode == Phi0Mode::linear) {
    Eigen::MatrixXd out = raw_cells.cast<double>();
    if (!out.allFinite()) fail(errc::value, "non-finite feature entry");
    return out;
  }
  if (levels <= 0) fail(errc::config, "hi mode requires positive quantization levels");
  Eigen::MatrixXd out(raw_cells.rows() * levels, n);
  for (Eigen::Index x = 0; x < n; ++x)
    out.col(x) = phi0_hi(raw_cells.col(x).cast<double>(), levels);
  return out;
}

void save_features(const std::string& path, const FeatureFile& data) {
  if (data.rows < 1 || data.cols < 1 || data.raw_dim < 1)
    fail(errc::shape, "save_features: rows, cols and raw_dim must be >= 1");
  const int n = data.rows * data.cols;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(errc::io, "cannot open '" + path + "' for writing");
  binio::write_bytes(os, kFeatureMagic, 4);
  binio::write_u32(os, kFeatureVersion);
  binio::write_u32(os, static_cast<std::uint32_t>(data.images.size()));
  binio::write_u32(os, static_cast<std::uint32_t>(data.rows));
  binio::write_u32(os, static_cast<std::uint32_t>(data.cols));
  binio::write_u32(os, static_cast<std::uint32_t>(data.raw_dim));
  binio::write_u8(os, static_cast<std::uint8_t>(data.mode));
  binio::write_u32(os, data.mode == Phi0Mode::hi ? static_cast<std::uint32_t>(data.hi_levels) : 0u);
  for (const auto& img : data.images) {
    if (img.cells.rows() != data.raw_dim || img.cells.cols() != n)
      fail(errc::shape, "save_features: image '" + img.image_id + "' has wrong cell shape");
    binio::write_string(os, img.image_id);
    for (int x = 0; x < n; ++x)
      for (int d = 0; d < data.raw_dim; ++d) binio::write_f32(os, img.cells(d, x));
  }
  if (!os) fail(errc::io, "write failed for '" + path + "'");
}

FeatureFile read_feature_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(errc::io, "cannot open feature file '" + path + "'");
  binio::expect_magic(is, kFeatureMagic, "feature file");
  const std::uint32_t version = binio::read_u32(is, "feature file version");
  if (version != kFeatureVersion)
    fail(errc::format, "unsupported feature file version " + std::to_string(version));
  FeatureFile data;
  const std::uint32_t n_images = binio::read_u32(is, "feature file image count");
  data.rows = static_cast<int>(binio::read_u32(is, "feature file rows"));
  data.cols = static_cast<int>(binio::read_u32(is, "feature file cols"));
  data.raw_dim = static_cast<int>(binio::read_u32(is, "feature file dimension"));
  const std::uint8_t mode_byte = binio::read_u8(is, "feature file mode");
  if (mode_byte > 1)
    fail(errc::format, "unknown feature mode byte " + std::to_string(mode_byte));
  data.mode = static_cast<Phi0Mode>(mode_byte);
  data.hi_levels = static_cast<int>(binio::read_u32(is, "feature file hi levels"));
  if (data.rows < 1 || data.cols < 1 || data.raw_dim < 1)
    fail(errc::shape, "feature file declares empty grid or zero dimension");
  if (data.mode == Phi0Mode::hi && data.hi_levels < 1)
    fail(errc::format, "hi feature file with zero quantization levels");
  const int n = data.rows * data.cols;
  data.images.reserve(n_images);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    RawImage img;
    img.image_id = binio::read_string(is, "image id");
    img.cells.resize(data.raw_dim, n);
    for (int x = 0; x < n; ++x)
      for (int d = 0; d < data.raw_dim; ++d) {
        float v;
        try {
          v = binio::read_f32(is, "cell features");
        } catch (const Error&) {
          fail(errc::shape, "feature payload truncated in image '" + img.image_id +
                                "' (expected " + std::to_string(n) + " cells of dim " +
                                std::to_string(data.raw_dim) + ")");
        }
        if (!std::isfinite(v))
          fail(errc::value, "non-finite feature value in image '" + img.image_id + "'");
        if (data.mode == Phi0Mode::hi && (v < 0.0f || v > 1.0f))
          fail(errc::value, "hi feature value " + std::to_string(v) + " outside [0,1] in image '" +
                                img.image_id + "'");
        img.cells(d, x) = v;
      }
    data.images.push_back(std::move(img));
  }
  return data;
}

std::vector<ImageFeatures> load_features(const std::string& path, const GridSpec& spec,
                                         Phi0Mode mode) {
  spec.validate();
  FeatureFile data = read_feature_file(path);
  if (data.rows != spec.rows || data.cols != spec.cols)
    fail(errc::shape, "feature file grid " + std::to_string(data.rows) + "x" +
                          std::to_string(data.cols) + " does not match configured grid " +
                          std::to_string(spec.rows) + "x" + std::to_string(spec.cols));
  if (data.mode != mode)
    fail(errc::config, "feature file mode '" + to_string(data.mode) +
                           "' does not match requested mode '" + to_string(mode) + "'");
  std::vector<ImageFeatures> out;
  out.reserve(data.images.size());
  for (const auto& img : data.images)
    out.push_back({img.image_id, apply_phi0(img.cells, data.mode, data.hi_levels)});
  return out;
}

void save_labels(const std::string& path, const LabelMatrix& labels) {
  labels.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(errc::io, "cannot open '" + path + "' for writing");
  os << "image_id,concept,label\n";
  for (int p = 0; p < labels.images(); ++p) {
    if (labels.image_ids[p].find(',') != std::string::npos)
      fail(errc::value, "image id contains a comma: '" + labels.image_ids[p] + "'");
    for (int k = 0; k < labels.concept_count(); ++k) {
      if (labels.concepts[k].find(',') != std::string::npos)
        fail(errc::value, "concept name contains a comma: '" + labels.concepts[k] + "'");
      os << labels.image_ids[p] << ',' << labels.concepts[k] << ',' << labels.y(p, k) << '\n';
    }
  }
  if (!os) fail(errc::io, "write failed for '" + path + "'");
}

LabelMatrix load_labels(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(errc::io, "cannot open labels file '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || trim(line) != "image_id,concept,label")
    fail(errc::format, "labels file must start with header 'image_id,concept,label'");

  std::vector<std::string> image_ids;
  std::vector<std::string> concepts;
  std::unordered_map<std::string, int> image_row;
  std::unordered_map<std::string, int> concept_col;
  struct Entry {
    int row, col, label;
  };
  std::vector<Entry> entries;

  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::stringstream ss(t);
    std::string id, concept, label_str;
    if (!std::getline(ss, id, ',') || !std::getline(ss, concept, ',') ||
        !std::getline(ss, label_str))
      fail(errc::format, "labels line " + std::to_string(line_no) + ": expected 3 fields");
    int label;
    const std::string ls = trim(label_str);
    if (ls == "1" || ls == "+1")
      label = 1;
    else if (ls == "-1")
      label = -1;
    else
      fail(errc::value, "labels line " + std::to_string(line_no) + ": label must be -1 or 1");
    auto [iit, inew] = image_row.try_emplace(id, static_cast<int>(image_ids.size()));
    if (inew) image_ids.push_back(id);
    auto [cit, cnew] = concept_col.try_emplace(concept, static_cast<int>(concepts.size()));
    if (cnew) concepts.push_back(concept);
    entries.push_back({iit->second, cit->second, label});
  }

  LabelMatrix labels;
  labels.image_ids = std::move(image_ids);
  labels.concepts = std::move(concepts);
  labels.y = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(labels.image_ids.size()),
                                   static_cast<Eigen::Index>(labels.concepts.size()));
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(labels.y.rows(), labels.y.cols());
  for (const auto& e : entries) {
    if (seen(e.row, e.col))
      fail(errc::format, "duplicate label for image '" + labels.image_ids[e.row] +
                             "', concept '" + labels.concepts[e.col] + "'");
    seen(e.row, e.col) = 1;
    labels.y(e.row, e.col) = e.label;
  }
  if (seen.minCoeff() == 0)
    fail(errc::shape, "labels file does not cover every (image, concept) pair");
  return labels;
}

SyntheticData gen_synthetic(const GridSpec& spec, int n_images, std::uint64_t seed,
                            const SyntheticOptions& opt) {
  spec.validate();
  if (n_images < 4 || n_images % 2 != 0)
    fail(errc::config, "gen_synthetic: n_images must be even and >= 4");
  if (spec.cols % 2 != 0)
    fail(errc::config, "gen_synthetic: grid cols must be even so both classes share content");
  if (opt.dim < 1) fail(errc::config, "gen_synthetic: dim must be >= 1");
  if (!(opt.noise >= 0.0)) fail(errc::config, "gen_synthetic: noise must be >= 0");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int d = opt.dim;
  Eigen::VectorXd proto_a(d), proto_b(d);
  for (int i = 0; i < d; ++i) proto_a[i] = unif(rng);
  for (int i = 0; i < d; ++i) proto_b[i] = unif(rng);
  proto_a /= proto_a.sum();
  proto_b /= proto_b.sum();

  std::normal_distribution<double> gauss(0.0, opt.noise > 0.0 ? opt.noise : 1.0);
  const auto jitter = [&](double v) {
    if (opt.noise <= 0.0) return v;
    return std::clamp(v + gauss(rng), 0.0, 1.0);
  };

  const int n = spec.cell_count();
  SyntheticData data;
  data.features.rows = spec.rows;
  data.features.cols = spec.cols;
  data.features.raw_dim = d;
  data.features.mode = opt.mode;
  data.features.hi_levels = opt.mode == Phi0Mode::hi ? opt.hi_levels : 0;
  data.features.images.reserve(n_images);

  data.labels.concepts = {"arrangement_ab", "arrangement_ba"};
  data.labels.y.resize(n_images, 2);

  char id_buf[32];
  for (int i = 0; i < n_images; ++i) {
    const int cls = i % 2;  // 0: A left of B, 1: B left of A
    std::snprintf(id_buf, sizeof(id_buf), "synth_%04d", i);
    RawImage img;
    img.image_id = id_buf;
    img.cells.resize(d, n);
    for (int cell = 0; cell < n; ++cell) {
      const bool left_half = spec.cell_col(cell) < spec.cols / 2;
      const Eigen::VectorXd& proto = (left_half == (cls == 0)) ? proto_a : proto_b;
      for (int dd = 0; dd < d; ++dd)
        img.cells(dd, cell) = static_cast<float>(jitter(proto[dd]));
    }
    data.features.images.push_back(std::move(img));
    data.labels.image_ids.push_back(id_buf);
    data.labels.y(i, 0) = cls == 0 ? 1 : -1;
    data.labels.y(i, 1) = cls == 0 ? -1 : 1;
  }
  return data;
}

}  // namespace ctxkm
