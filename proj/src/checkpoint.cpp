#include "ctxkm/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "binio.hpp"

namespace ctxkm {
namespace {

constexpr char kCheckpointMagic[4] = {'C', 'T', 'X', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  cp.ctx.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(errc::io, "cannot open '" + path + "' for writing");
  binio::write_bytes(os, kCheckpointMagic, 4);
  binio::write_u32(os, kCheckpointVersion);
  binio::write_u32(os, static_cast<std::uint32_t>(cp.grid.rows));
  binio::write_u32(os, static_cast<std::uint32_t>(cp.grid.cols));
  binio::write_u32(os, static_cast<std::uint32_t>(cp.grid.radius));
  binio::write_u32(os, static_cast<std::uint32_t>(cp.grid.sectors));
  binio::write_u8(os, static_cast<std::uint8_t>(cp.mode));
  binio::write_u32(os, static_cast<std::uint32_t>(cp.hi_levels));
  binio::write_u32(os, static_cast<std::uint32_t>(cp.raw_dim));
  binio::write_f64(os, cp.ctx.gamma);
  binio::write_u32(os, static_cast<std::uint32_t>(cp.ctx.depth));
  const int n = cp.grid.cell_count();
  for (const auto& layer : cp.ctx.layers)
    for (const auto& m : layer.matrices)
      for (int row = 0; row < n; ++row)
        for (int col = 0; col < n; ++col) binio::write_f64(os, m(row, col));
  save_model(os, cp.model);
  binio::write_u32(os, static_cast<std::uint32_t>(cp.objective_history.size()));
  for (double e : cp.objective_history) binio::write_f64(os, e);
  binio::write_u32(os, static_cast<std::uint32_t>(cp.outer_iter));
  binio::write_u8(os, cp.converged ? 1 : 0);
  if (!os) fail(errc::io, "write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(errc::io, "cannot open checkpoint '" + path + "'");
  binio::expect_magic(is, kCheckpointMagic, "checkpoint");
  const std::uint32_t version = binio::read_u32(is, "checkpoint version");
  if (version != kCheckpointVersion)
    fail(errc::format, "unsupported checkpoint version " + std::to_string(version));
  Checkpoint cp;
  cp.grid.rows = static_cast<int>(binio::read_u32(is, "checkpoint grid rows"));
  cp.grid.cols = static_cast<int>(binio::read_u32(is, "checkpoint grid cols"));
  cp.grid.radius = static_cast<int>(binio::read_u32(is, "checkpoint grid radius"));
  cp.grid.sectors = static_cast<int>(binio::read_u32(is, "checkpoint grid sectors"));
  cp.grid.validate();
  const std::uint8_t mode_byte = binio::read_u8(is, "checkpoint mode");
  if (mode_byte > 1) fail(errc::format, "checkpoint has unknown mode byte");
  cp.mode = static_cast<Phi0Mode>(mode_byte);
  cp.hi_levels = static_cast<int>(binio::read_u32(is, "checkpoint hi levels"));
  cp.raw_dim = static_cast<int>(binio::read_u32(is, "checkpoint raw dim"));
  const double gamma = binio::read_f64(is, "checkpoint gamma");
  const int depth = static_cast<int>(binio::read_u32(is, "checkpoint depth"));
  if (depth < 1 || depth > 64) fail(errc::format, "checkpoint depth out of range");

  cp.ctx = make_handcrafted_context(cp.grid, gamma, depth);
  const int n = cp.grid.cell_count();
  for (auto& layer : cp.ctx.layers)
    for (auto& m : layer.matrices)
      for (int row = 0; row < n; ++row)
        for (int col = 0; col < n; ++col) m(row, col) = binio::read_f64(is, "context weights");
  cp.ctx.validate();  // rejects corrupted files with off-mask weights

  cp.model = load_model(is);
  const std::uint32_t hist = binio::read_u32(is, "objective history length");
  if (hist > (1u << 24)) fail(errc::format, "objective history length out of range");
  cp.objective_history.resize(hist);
  for (std::uint32_t i = 0; i < hist; ++i)
    cp.objective_history[i] = binio::read_f64(is, "objective history");
  cp.outer_iter = static_cast<int>(binio::read_u32(is, "outer iteration"));
  cp.converged = binio::read_u8(is, "converged flag") != 0;
  return cp;
}

nlohmann::json context_to_json(const ContextStack& ctx) {
  ctx.validate();
  nlohmann::json j;
  j["grid"] = {{"rows", ctx.grid.rows},
               {"cols", ctx.grid.cols},
               {"radius", ctx.grid.radius},
               {"sectors", ctx.grid.sectors}};
  j["gamma"] = ctx.gamma;
  j["depth"] = ctx.depth;
  j["layers"] = nlohmann::json::array();
  for (int t = 0; t < ctx.depth; ++t) {
    nlohmann::json layer;
    layer["t"] = t;
    layer["sectors"] = nlohmann::json::array();
    for (int c = 0; c < ctx.grid.sectors; ++c) {
      nlohmann::json sector;
      sector["c"] = c;
      sector["name"] = sector_name(c, ctx.grid.sectors);
      sector["edges"] = nlohmann::json::array();
      for (const auto& [from, to] : ctx.layers[t].edges[c])
        sector["edges"].push_back({{"from_cell", from},
                                   {"to_cell", to},
                                   {"weight", ctx.layers[t].matrices[c](from, to)}});
      layer["sectors"].push_back(std::move(sector));
    }
    j["layers"].push_back(std::move(layer));
  }
  return j;
}

ContextStack context_from_json(const nlohmann::json& j) {
  try {
    GridSpec spec;
    spec.rows = j.at("grid").at("rows").get<int>();
    spec.cols = j.at("grid").at("cols").get<int>();
    spec.radius = j.at("grid").at("radius").get<int>();
    spec.sectors = j.at("grid").at("sectors").get<int>();
    ContextStack ctx = make_handcrafted_context(spec, j.at("gamma").get<double>(),
                                                j.at("depth").get<int>());
    for (auto& layer : ctx.layers)
      for (auto& m : layer.matrices) m.setZero();
    for (const auto& layer : j.at("layers")) {
      const int t = layer.at("t").get<int>();
      if (t < 0 || t >= ctx.depth) fail(errc::format, "context json: layer index out of range");
      for (const auto& sector : layer.at("sectors")) {
        const int c = sector.at("c").get<int>();
        if (c < 0 || c >= spec.sectors)
          fail(errc::format, "context json: sector index out of range");
        for (const auto& edge : sector.at("edges")) {
          const int from = edge.at("from_cell").get<int>();
          const int to = edge.at("to_cell").get<int>();
          if (from < 0 || from >= ctx.layers[t].n || to < 0 || to >= ctx.layers[t].n ||
              !ctx.layers[t].masked(c, from, to))
            fail(errc::format, "context json: edge outside the support mask");
          ctx.layers[t].matrices[c](from, to) = edge.at("weight").get<double>();
        }
      }
    }
    ctx.validate();
    return ctx;
  } catch (const nlohmann::json::exception& e) {
    fail(errc::format, std::string("malformed context json: ") + e.what());
  }
}

}  // namespace ctxkm
