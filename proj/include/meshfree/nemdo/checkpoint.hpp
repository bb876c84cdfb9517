#pragma once

#include <json.hpp>

#include <filesystem>
#include <optional>

#include "meshfree/errors.hpp"
#include "meshfree/nemdo/model.hpp"
#include "meshfree/nemdo/serialize.hpp"

namespace meshfree::nemdo {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Header: {"config", "config_hash", "extra"}; payload: the parameter vector.
inline void save_checkpoint(const std::filesystem::path& path, const Model& model,
                            const nlohmann::json& extra = nlohmann::json::object()) {
  require(model.params.size() == ParameterLayout(model.config).size(), "parameter vector does not match config");
  const nlohmann::json header = {
      {"config", model.config.to_json()}, {"config_hash", model.config.hash()}, {"extra", extra}};
  io::Writer w("NMDOCKPT", kCheckpointVersion, header);
  w.put_array(model.params);
  w.save(path);
}

struct LoadedCheckpoint {
  Model model;
  nlohmann::json extra;
};

inline LoadedCheckpoint load_checkpoint_with_extra(const std::filesystem::path& path,
                                                   const std::optional<ModelConfig>& expected = std::nullopt) {
  io::Reader r(path, "NMDOCKPT", kCheckpointVersion);
  LoadedCheckpoint out;
  try {
    out.model.config = ModelConfig::from_json(r.header().at("config"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IncompatibleCheckpoint, path.string() + ": bad config block: " + e.what());
  }
  if (r.header().at("config_hash").get<std::uint64_t>() != out.model.config.hash())
    fail(ErrorCode::IncompatibleCheckpoint, path.string() + ": config hash mismatch");
  if (expected && !(*expected == out.model.config))
    fail(ErrorCode::IncompatibleCheckpoint, path.string() + ": checkpoint config differs from the requested model");
  out.model.params = r.get_array<double>();
  r.expect_end();
  if (out.model.params.size() != ParameterLayout(out.model.config).size())
    fail(ErrorCode::IncompatibleCheckpoint, path.string() + ": parameter count does not match config");
  out.extra = r.header().value("extra", nlohmann::json::object());
  return out;
}

inline Model load_checkpoint(const std::filesystem::path& path,
                             const std::optional<ModelConfig>& expected = std::nullopt) {
  return load_checkpoint_with_extra(path, expected).model;
}

}  // namespace meshfree::nemdo
