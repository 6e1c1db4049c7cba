#include "stbeta/draws_io.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "stbeta/csv.hpp"
#include "stbeta/errors.hpp"

namespace stbeta {

using nlohmann::json;

std::string metadata_path_for(const std::string& draws_path) {
  std::filesystem::path p(draws_path);
  p.replace_extension(".meta.json");
  return p.string();
}

std::string provenance_comment(const RunMetadata& metadata) {
  return "# config_hash=" + metadata.config_hash + ",seed=" + std::to_string(metadata.seed);
}

std::string metadata_to_json(const RunMetadata& m) {
  json j;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["variant"] = m.variant;
  j["spatial_effect"] = m.spatial_effect;
  j["temporal_effect"] = m.temporal_effect;
  j["group_effect"] = m.group_effect;
  j["phi_scale"] = m.phi_scale;
  j["region_names"] = m.region_names;
  j["year_labels"] = m.year_labels;
  j["group_labels"] = m.group_labels;
  j["covariate_names"] = m.covariate_names;
  j["iterations"] = m.iterations;
  j["burn_in"] = m.burn_in;
  j["thinning"] = m.thinning;
  j["chains"] = m.chains;
  j["retained_per_chain"] = m.retained_per_chain;
  j["retained_pooled"] = m.retained_per_chain * m.chains;
  json notes = json::object();
  for (const auto& [key, value] : m.notes) notes[key] = value;
  j["notes"] = notes;
  j["config"] = m.config_text;
  return j.dump(2) + "\n";
}

RunMetadata metadata_from_json(const std::string& text) {
  RunMetadata m;
  try {
    const json j = json::parse(text);
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.variant = j.at("variant").get<std::string>();
    m.spatial_effect = j.at("spatial_effect").get<bool>();
    m.temporal_effect = j.at("temporal_effect").get<bool>();
    m.group_effect = j.at("group_effect").get<bool>();
    m.phi_scale = j.at("phi_scale").get<double>();
    m.region_names = j.at("region_names").get<std::vector<std::string>>();
    m.year_labels = j.at("year_labels").get<std::vector<int>>();
    m.group_labels = j.at("group_labels").get<std::vector<std::string>>();
    m.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
    m.iterations = j.at("iterations").get<std::size_t>();
    m.burn_in = j.at("burn_in").get<std::size_t>();
    m.thinning = j.at("thinning").get<std::size_t>();
    m.chains = j.at("chains").get<std::size_t>();
    m.retained_per_chain = j.at("retained_per_chain").get<std::size_t>();
    for (const auto& [key, value] : j.at("notes").items()) {
      m.notes.emplace_back(key, value.get<std::string>());
    }
    m.config_text = j.at("config").get<std::string>();
  } catch (const json::exception& e) {
    throw IngestError(std::string("malformed run metadata: ") + e.what());
  }
  return m;
}

void write_draws(const PosteriorDraws& draws, const std::string& path) {
  std::ostringstream out;
  out << provenance_comment(draws.metadata) << '\n';
  out << "chain,iteration";
  for (const auto& name : draws.names) out << ',' << name;
  out << '\n';
  for (std::size_t c = 0; c < draws.chain_count(); ++c) {
    for (std::size_t d = 0; d < draws.draws_in_chain(c); ++d) {
      out << (c + 1) << ',' << draws.iterations[c][d];
      for (double v : draws.draw(c, d)) out << ',' << csv::format_double(v);
      out << '\n';
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  file << out.str();
  std::ofstream meta(metadata_path_for(path), std::ios::binary);
  if (!meta) {
    throw std::runtime_error("cannot write '" + metadata_path_for(path) + "'");
  }
  meta << metadata_to_json(draws.metadata);
}

PosteriorDraws read_draws(const std::string& path) {
  const std::string meta_path = metadata_path_for(path);
  if (!std::filesystem::exists(meta_path)) {
    throw IngestError("missing run metadata '" + meta_path + "' for draws '" + path + "'");
  }
  PosteriorDraws draws;
  {
    std::ifstream in(meta_path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    draws.metadata = metadata_from_json(buffer.str());
  }
  std::vector<std::string> lines;
  try {
    lines = csv::read_lines(path);
  } catch (const std::exception& e) {
    throw IngestError(e.what());
  }
  std::size_t l = 0;
  while (l < lines.size() && lines[l].starts_with("#")) ++l;
  if (l >= lines.size()) {
    throw IngestError("draws file '" + path + "' has no header");
  }
  const auto header = csv::split_record(lines[l++]);
  if (header.size() < 3 || header[0] != "chain" || header[1] != "iteration") {
    throw IngestError("draws file '" + path + "' does not start with chain,iteration columns");
  }
  draws.names.assign(header.begin() + 2, header.end());
  std::map<std::size_t, std::size_t> chain_slot;
  for (; l < lines.size(); ++l) {
    const auto fields = csv::split_record(lines[l]);
    if (fields.size() != header.size()) {
      throw IngestError(path + ":" + std::to_string(l + 1) + ": wrong field count");
    }
    try {
      const auto chain = static_cast<std::size_t>(csv::parse_integer(fields[0]));
      auto [it, inserted] = chain_slot.emplace(chain, draws.chain_values.size());
      if (inserted) {
        draws.chain_values.emplace_back();
        draws.iterations.emplace_back();
      }
      draws.iterations[it->second].push_back(static_cast<std::size_t>(csv::parse_integer(fields[1])));
      auto& values = draws.chain_values[it->second];
      for (std::size_t f = 2; f < fields.size(); ++f) values.push_back(csv::parse_double(fields[f]));
    } catch (const std::invalid_argument& e) {
      throw IngestError(path + ":" + std::to_string(l + 1) + ": " + e.what());
    }
  }
  if (draws.chain_values.empty()) {
    throw IngestError("draws file '" + path + "' contains no draws");
  }
  return draws;
}

}  // namespace stbeta
