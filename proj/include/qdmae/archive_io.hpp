#ifndef QDMAE_ARCHIVE_IO_HPP
#define QDMAE_ARCHIVE_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "qdmae/archive.hpp"
#include "qdmae/cma_es.hpp"

namespace qdmae {

/// Provenance header carried by every output file.
struct FileMeta {
    std::string config_hash = "none";
    std::uint64_t seed = 0;
    double alpha = 0.0;
};

std::string meta_comment(const FileMeta& meta);

/// Shortest round-trip decimal rendering; NaN prints as "nan".
std::string format_double(double v);

/// 2D heatmap CSV: one '#' metadata line, a bounds line, a resolution line,
/// then resolution[0] rows of resolution[1] occupant objectives with empty
/// cells as the token "nan". Row r, column c is the cell with grid
/// coordinates (r, c). Throws for archives that are not 2-dimensional.
void write_heatmap_csv(std::ostream& out, const Archive& archive, const FileMeta& meta);

/// SVG rendering of the same grid on a fixed [0, 100] color scale with empty
/// cells in neutral gray. Layout matches the CSV: row 0 at the top.
void write_heatmap_svg(std::ostream& out, const Archive& archive, const FileMeta& meta);

/// JSON snapshot (schema qdmae-archive-v1) holding the config and every cell
/// that has been touched: occupied, visited, or with a moved threshold.
nlohmann::json archive_snapshot(const Archive& archive, const FileMeta& meta);
Archive archive_from_snapshot(const nlohmann::json& snapshot);

nlohmann::json es_state_to_json(const CmaEs& es);
CmaEs es_state_from_json(const nlohmann::json& j);

}  // namespace qdmae

#endif
