#pragma once

#include <string>

#include "stbeta/mcmc.hpp"

namespace stbeta {

/// "out/draws.csv" -> "out/draws.meta.json".
std::string metadata_path_for(const std::string& draws_path);

/**
 * Writes the draws CSV (columns chain, iteration, then parameters) and its
 * metadata sidecar. The first CSV line is a '#' comment carrying the config
 * hash and seed. Numbers use the shortest round-trip decimal form, so equal
 * draws give byte-identical files.
 */
void write_draws(const PosteriorDraws& draws, const std::string& path);

/// Reads draws written by write_draws. Throws IngestError when the file or
/// its sidecar is missing, malformed, or holds no draws.
PosteriorDraws read_draws(const std::string& path);

std::string metadata_to_json(const RunMetadata& metadata);
RunMetadata metadata_from_json(const std::string& text);

/// "# config_hash=<hash>,seed=<seed>" line placed at the top of CSV outputs.
std::string provenance_comment(const RunMetadata& metadata);

}  // namespace stbeta
