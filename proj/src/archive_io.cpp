#include "qdmae/archive_io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace qdmae {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string meta_comment(const FileMeta& meta) {
    return "# qdmae " QDMAE_VERSION " config=" + meta.config_hash +
           " seed=" + std::to_string(meta.seed) + " alpha=" + format_double(meta.alpha);
}

namespace {

void require_2d(const Archive& archive) {
    if (archive.config().measure_dims() != 2)
        throw std::invalid_argument("heatmap export requires a 2-dimensional measure space");
}

}  // namespace

void write_heatmap_csv(std::ostream& out, const Archive& archive, const FileMeta& meta) {
    require_2d(archive);
    const ArchiveConfig& cfg = archive.config();
    out << meta_comment(meta) << "\n";
    out << "bounds," << format_double(cfg.lower_bounds[0]) << ","
        << format_double(cfg.upper_bounds[0]) << "," << format_double(cfg.lower_bounds[1])
        << "," << format_double(cfg.upper_bounds[1]) << "\n";
    out << "resolution," << cfg.resolution[0] << "," << cfg.resolution[1] << "\n";
    const long cols = cfg.resolution[1];
    for (long r = 0; r < cfg.resolution[0]; ++r) {
        for (long c = 0; c < cols; ++c) {
            const Cell& cell = archive.cell(r * cols + c);
            if (c > 0) out << ",";
            out << (cell.occupied() ? format_double(*cell.objective) : "nan");
        }
        out << "\n";
    }
}

namespace {

// Fixed three-stop color ramp over [0, 100]: dark blue, teal, yellow.
std::string objective_color(double f) {
    const double t = std::clamp(f / 100.0, 0.0, 1.0);
    auto lerp = [](int a, int b, double u) { return static_cast<int>(a + (b - a) * u); };
    int r, g, b;
    if (t < 0.5) {
        const double u = t / 0.5;
        r = lerp(0x27, 0x1f, u), g = lerp(0x2d, 0x9e, u), b = lerp(0x73, 0x89, u);
    } else {
        const double u = (t - 0.5) / 0.5;
        r = lerp(0x1f, 0xfd, u), g = lerp(0x9e, 0xe7, u), b = lerp(0x89, 0x25, u);
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

void write_heatmap_svg(std::ostream& out, const Archive& archive, const FileMeta& meta) {
    require_2d(archive);
    const ArchiveConfig& cfg = archive.config();
    const long rows = cfg.resolution[0];
    const long cols = cfg.resolution[1];
    const double cell_px = std::max(1.0, 600.0 / std::max(rows, cols));
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<!-- " << meta_comment(meta).substr(2) << " -->\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(cols * cell_px)
        << "\" height=\"" << format_double(rows * cell_px) << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"#d9d9d9\"/>\n";
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            const Cell& cell = archive.cell(r * cols + c);
            if (!cell.occupied()) continue;
            out << "<rect x=\"" << format_double(c * cell_px) << "\" y=\""
                << format_double(r * cell_px) << "\" width=\"" << format_double(cell_px)
                << "\" height=\"" << format_double(cell_px) << "\" fill=\""
                << objective_color(*cell.objective) << "\"/>\n";
        }
    }
    out << "</svg>\n";
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
    Eigen::VectorXd v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

}  // namespace

nlohmann::json archive_snapshot(const Archive& archive, const FileMeta& meta) {
    const ArchiveConfig& cfg = archive.config();
    nlohmann::json j;
    j["schema"] = "qdmae-archive-v1";
    j["meta"] = {{"version", QDMAE_VERSION},
                 {"config", meta.config_hash},
                 {"seed", meta.seed},
                 {"alpha", meta.alpha}};
    j["config"] = {{"lower_bounds", vector_to_json(cfg.lower_bounds)},
                   {"upper_bounds", vector_to_json(cfg.upper_bounds)},
                   {"resolution", cfg.resolution},
                   {"learning_rate", cfg.learning_rate},
                   {"min_quality", cfg.min_quality}};
    nlohmann::json cells = nlohmann::json::array();
    for (long i = 0; i < archive.cell_count(); ++i) {
        const Cell& cell = archive.cell(i);
        if (!cell.occupied() && cell.occupancy == 0 && cell.threshold == cfg.min_quality)
            continue;
        nlohmann::json entry = {{"index", i},
                                {"threshold", cell.threshold},
                                {"occupancy", cell.occupancy}};
        if (cell.occupied()) {
            entry["objective"] = *cell.objective;
            entry["measures"] = vector_to_json(*cell.measures);
            entry["solution"] = vector_to_json(*cell.solution);
        }
        cells.push_back(std::move(entry));
    }
    j["cells"] = std::move(cells);
    return j;
}

Archive archive_from_snapshot(const nlohmann::json& snapshot) {
    if (snapshot.value("schema", "") != "qdmae-archive-v1")
        throw std::invalid_argument("unrecognized archive snapshot schema");
    const nlohmann::json& jc = snapshot.at("config");
    ArchiveConfig cfg;
    cfg.lower_bounds = vector_from_json(jc.at("lower_bounds"));
    cfg.upper_bounds = vector_from_json(jc.at("upper_bounds"));
    cfg.resolution = jc.at("resolution").get<std::vector<int>>();
    cfg.learning_rate = jc.at("learning_rate").get<double>();
    cfg.min_quality = jc.at("min_quality").get<double>();
    Archive archive(cfg);
    for (const nlohmann::json& entry : snapshot.at("cells")) {
        const long index = entry.at("index").get<long>();
        if (index < 0 || index >= archive.cell_count())
            throw std::invalid_argument("snapshot cell index out of range");
        Cell cell;
        cell.threshold = entry.at("threshold").get<double>();
        cell.occupancy = entry.at("occupancy").get<long>();
        if (entry.contains("objective")) {
            cell.objective = entry.at("objective").get<double>();
            cell.measures = vector_from_json(entry.at("measures"));
            cell.solution = vector_from_json(entry.at("solution"));
        }
        archive.restore_cell(index, std::move(cell));
    }
    return archive;
}

nlohmann::json es_state_to_json(const CmaEs& es) {
    const int n = es.dimension();
    nlohmann::json cov = nlohmann::json::array();
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) cov.push_back(es.covariance()(r, c));
    return {{"mean", vector_to_json(es.mean())},
            {"sigma", es.sigma()},
            {"lambda", es.lambda()},
            {"covariance", std::move(cov)},
            {"path_sigma", vector_to_json(es.path_sigma())},
            {"path_cov", vector_to_json(es.path_cov())},
            {"generations", es.generations()}};
}

CmaEs es_state_from_json(const nlohmann::json& j) {
    const Eigen::VectorXd mean = vector_from_json(j.at("mean"));
    CmaEs es(mean, j.at("sigma").get<double>(), j.at("lambda").get<int>());
    const int n = es.dimension();
    Eigen::MatrixXd cov(n, n);
    const nlohmann::json& flat = j.at("covariance");
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) cov(r, c) = flat[r * n + c].get<double>();
    es.restore(cov, vector_from_json(j.at("path_sigma")), vector_from_json(j.at("path_cov")),
               j.at("generations").get<long>());
    return es;
}

}  // namespace qdmae
