#include <doctest.h>

#include <cmath>
#include <map>

#include "qdmae/emitters.hpp"
#include "qdmae/experiment.hpp"
#include "qdmae/scheduler.hpp"

using namespace qdmae;

namespace {

StepCandidate cand(int index, double delta, bool new_cell, double objective) {
    StepCandidate c;
    c.index = index;
    c.delta = delta;
    c.status = new_cell ? InsertStatus::NewlyOccupied
                        : (delta > 0 ? InsertStatus::Improved : InsertStatus::Rejected);
    c.objective = objective;
    return c;
}

ArchiveConfig small_archive(double alpha, double min_quality, double extent, int res) {
    ArchiveConfig cfg;
    cfg.lower_bounds = Eigen::Vector2d(-extent, -extent);
    cfg.upper_bounds = Eigen::Vector2d(extent, extent);
    cfg.resolution = {res, res};
    cfg.learning_rate = alpha;
    cfg.min_quality = min_quality;
    return cfg;
}

}  // namespace

TEST_CASE("improvement ranking") {
    SUBCASE("annealed sorts by descending delta") {
        std::vector<StepCandidate> c = {cand(0, 3, false, 0), cand(1, 1, false, 0),
                                        cand(2, 2, false, 0)};
        CHECK(rank_improvement(c, RankingMode::Annealed) == std::vector<int>{0, 2, 1});
    }
    SUBCASE("two-stage puts any discovery above any improvement") {
        std::vector<StepCandidate> c = {cand(0, 98.7, false, 99.0), cand(1, 1.0, true, 1.0)};
        CHECK(rank_improvement(c, RankingMode::TwoStage) == std::vector<int>{1, 0});
        // Within discoveries the objective decides; rejected candidates sink.
        std::vector<StepCandidate> d = {cand(0, -5.0, false, 10.0), cand(1, 2.0, true, 2.0),
                                        cand(2, 7.0, true, 7.0), cand(3, 4.0, false, 30.0)};
        CHECK(rank_improvement(d, RankingMode::TwoStage) == std::vector<int>{2, 1, 3, 0});
    }
    SUBCASE("ties break by ascending candidate index") {
        std::vector<StepCandidate> c = {cand(0, 9, false, 0), cand(1, 1, false, 0),
                                        cand(2, 5, false, 0), cand(3, 0, false, 0),
                                        cand(4, 1, false, 0), cand(5, 5, false, 0)};
        CHECK(rank_improvement(c, RankingMode::Annealed) ==
              std::vector<int>{0, 2, 5, 1, 4, 3});
    }
    SUBCASE("order-preserving transforms of the key leave the permutation unchanged") {
        std::vector<StepCandidate> c = {cand(0, 0.3, false, 0), cand(1, -2.0, false, 0),
                                        cand(2, 11.0, false, 0), cand(3, 0.7, false, 0)};
        const auto base = rank_improvement(c, RankingMode::Annealed);
        for (auto& x : c) x.delta = std::exp(x.delta) * 3.0 + 1.0;
        CHECK(rank_improvement(c, RankingMode::Annealed) == base);
    }
}

TEST_CASE("gaussian emitter") {
    const auto domain = make_domain(DomainKind::LpSphere, 6);
    Archive archive(small_archive(1.0, -1e9, 5.12 * 3, 10));

    SUBCASE("zero sigma reproduces the parent") {
        Archive seeded(small_archive(1.0, -1e9, 5.12 * 3, 10));
        const Eigen::VectorXd parent = Eigen::VectorXd::Constant(6, 0.25);
        const auto eval = domain->evaluate(parent, false);
        seeded.try_insert(parent, eval.objective, eval.measures);
        GaussianEmitter emitter(5, 4, 0.0);
        emitter.step(seeded, *domain);
        // Every offspring falls in the parent's cell with the same objective
        // and is rejected by the elitist rule.
        const long cell = seeded.calculate_cell(eval.measures);
        CHECK(seeded.cell(cell).occupancy == 5);
        CHECK(seeded.occupied_count() == 1);
        CHECK(*seeded.cell(cell).objective == eval.objective);
    }
    SUBCASE("empty archive is an error") {
        GaussianEmitter emitter(5, 4, 0.5);
        CHECK_THROWS(emitter.step(archive, *domain));
    }
    SUBCASE("offspring distribution centers on the parent") {
        Archive seeded(small_archive(1.0, -1e9, 5.12 * 3, 10));
        const Eigen::VectorXd parent = Eigen::VectorXd::Constant(6, 0.5);
        const auto eval = domain->evaluate(parent, false);
        seeded.try_insert(parent, eval.objective, eval.measures);
        // Statistical oracle over 10^4 draws: mean within 4 standard errors.
        GaussianEmitter emitter(17, 10000, 0.3);
        const auto report = emitter.step(seeded, *domain);
        CHECK(report.candidates.size() == 10000);
        CHECK(report.evaluations == 10000);
        // Recover the offspring mean through the emitter's own draw stream;
        // every coordinate stays well inside the clip box at this sigma.
        double measure_sum = 0.0;
        Rng replay(17);
        for (int i = 0; i < 10000; ++i) {
            const Eigen::VectorXd off = parent + 0.3 * replay.normal_vector(6);
            measure_sum += off.head(3).sum();
        }
        const double se = 0.3 * std::sqrt(3.0) / std::sqrt(10000.0);
        CHECK(std::abs(measure_sum / 10000.0 - 1.5) < 4.0 * se);
    }
}

TEST_CASE("line emitter composes the two perturbation terms") {
    const auto domain = make_domain(DomainKind::LpSphere, 4);

    SUBCASE("both sigmas zero reproduce the first parent") {
        Archive archive(small_archive(1.0, -1e9, 5.12 * 2, 8));
        const Eigen::VectorXd p1 = Eigen::VectorXd::Constant(4, 0.2);
        const Eigen::VectorXd p2 = Eigen::VectorXd::Constant(4, -1.4);
        for (const auto& p : {p1, p2}) {
            const auto eval = domain->evaluate(p, false);
            archive.try_insert(p, eval.objective, eval.measures);
        }
        LineEmitter emitter(3, 6, 0.0, 0.0);
        const auto report = emitter.step(archive, *domain);
        for (const auto& c : report.candidates) {
            const auto& cell = archive.cell(c.cell_index);
            CHECK((c.objective == doctest::Approx(*cell.objective) || c.delta < 0));
        }
        CHECK(archive.occupied_count() == 2);
    }
    SUBCASE("zero line term reduces to the isotropic perturbation") {
        Archive archive(small_archive(1.0, -1e9, 5.12 * 2, 8));
        const Eigen::VectorXd p1 = Eigen::VectorXd::Constant(4, 0.2);
        const Eigen::VectorXd p2 = Eigen::VectorXd::Constant(4, -1.4);
        for (const auto& p : {p1, p2}) {
            const auto eval = domain->evaluate(p, false);
            archive.try_insert(p, eval.objective, eval.measures);
        }
        const std::uint64_t seed = 29;
        LineEmitter emitter(seed, 1, 0.4, 0.0);
        const auto report = emitter.step(archive, *domain);

        Rng replay(seed);
        const auto& occupied = archive.occupied_cells();
        const long a = occupied[replay.uniform_index(2)];
        long b = a;
        do {
            b = occupied[replay.uniform_index(2)];
        } while (b == a);
        const Eigen::VectorXd& pa =
            a == archive.calculate_cell(domain->evaluate(p1, false).measures) ? p1 : p2;
        const Eigen::VectorXd expected = pa + 0.4 * replay.normal_vector(4);
        CHECK(report.candidates[0].objective == domain->evaluate(expected, false).objective);
    }
    SUBCASE("fixed draws reproduce the formula") {
        Archive archive(small_archive(1.0, -1e9, 5.12 * 2, 8));
        const Eigen::VectorXd p1 = Eigen::VectorXd::Constant(4, 0.2);
        const Eigen::VectorXd p2 = Eigen::VectorXd::Constant(4, -1.4);
        const auto e1 = domain->evaluate(p1, false);
        const auto e2 = domain->evaluate(p2, false);
        archive.try_insert(p1, e1.objective, e1.measures);
        archive.try_insert(p2, e2.objective, e2.measures);
        const long cell1 = archive.calculate_cell(e1.measures);

        const std::uint64_t seed = 11;
        LineEmitter emitter(seed, 1, 0.4, 0.7);
        const auto report = emitter.step(archive, *domain);

        // Replay the emitter's draw order: two parent picks, the isotropic
        // vector, then the scalar line draw.
        Rng replay(seed);
        const auto& occupied = archive.occupied_cells();
        long a = occupied[replay.uniform_index(2)];
        long b = a;
        do {
            b = occupied[replay.uniform_index(2)];
        } while (b == a);
        const Eigen::VectorXd& pa = a == cell1 ? p1 : p2;
        const Eigen::VectorXd& pb = b == cell1 ? p1 : p2;
        const Eigen::VectorXd iso = replay.normal_vector(4);
        const double line = replay.normal();
        const Eigen::VectorXd expected = pa + 0.4 * iso + 0.7 * line * (pa - pb);
        const auto expected_eval = domain->evaluate(expected, false);
        CHECK(report.candidates[0].objective == expected_eval.objective);
        CHECK(report.candidates[0].cell_index == archive.calculate_cell(expected_eval.measures));
    }
}

TEST_CASE("es emitter on a small sphere improves the archive") {
    const auto domain = make_domain(DomainKind::LpSphere, 8);
    Archive archive(small_archive(0.01, 0.0, 5.12 * 4, 16));
    EsEmitter emitter(21, 12, Eigen::VectorXd::Zero(8), 0.5, RankingMode::Annealed,
                      SelectionMode::Mu, RestartPolicy::basic());
    double last_cover = 0.0;
    for (int step = 0; step < 100; ++step) {
        emitter.step(archive, *domain);
        const Metrics m = archive.metrics();
        CHECK(m.coverage >= last_cover);  // coverage never shrinks
        last_cover = m.coverage;
    }
    CHECK(archive.metrics().best > 80.0);
    CHECK(archive.occupied_count() > 3);
}

TEST_CASE("filter selection falls back to mu selection on a dead step") {
    // A constant-objective archive saturated at the threshold rejects
    // everything, which must not break adaptation.
    const auto domain = make_domain(DomainKind::LpPlateau, 6);
    Archive archive(small_archive(1.0, -1e9, 16.0, 4));
    EsEmitter emitter(33, 8, Eigen::VectorXd::Zero(6), 0.1, RankingMode::TwoStage,
                      SelectionMode::Filter, RestartPolicy::no_improvement());
    const auto first = emitter.step(archive, *domain);
    CHECK(first.accepted > 0);
    // Saturate: everything lands in occupied cells at the same objective.
    bool saw_dead_step = false;
    for (int step = 0; step < 20 && !saw_dead_step; ++step) {
        const auto report = emitter.step(archive, *domain);
        if (report.accepted == 0) {
            saw_dead_step = true;
            CHECK(report.restarted);  // no-improvement restart fires
        }
    }
    CHECK(saw_dead_step);
}

TEST_CASE("a stagnant ranking signal forces a restart") {
    // Saturated elitist plateau: after the discovery step every candidate
    // ties the incarnation record, so the stagnation clock runs out.
    const auto domain = make_domain(DomainKind::LpPlateau, 6);
    Archive archive(small_archive(1.0, -1e9, 16.0, 4));
    const int window = 5;
    EsEmitter emitter(3, 8, Eigen::VectorXd::Zero(6), 0.1, RankingMode::Annealed,
                      SelectionMode::Mu, RestartPolicy::basic(), false,
                      /*flat_tolerance=*/0.0, window);
    int first_restart = -1;
    for (int step = 1; step <= 20 && first_restart < 0; ++step) {
        if (emitter.step(archive, *domain).restarted) first_restart = step;
    }
    CHECK(first_restart == window + 1);
}

TEST_CASE("arborescence directions") {
    Eigen::VectorXd grad_f(3);
    grad_f << 1.0, 0.0, 0.0;
    Eigen::MatrixXd jac(2, 3);
    jac << 0.0, 1.0, 0.0, 0.0, 0.0, 1.0;
    Eigen::Vector3d coeffs(2.0, -1.0, 0.5);
    const Eigen::VectorXd dir = arborescence_direction(coeffs, grad_f, jac);
    CHECK(dir.isApprox(Eigen::Vector3d(2.0, -1.0, 0.5)));

    // Without measures the branch collapses onto the objective gradient line.
    const Eigen::MatrixXd empty_jac(0, 3);
    Eigen::VectorXd c0(1);
    c0 << -1.5;
    CHECK(arborescence_direction(c0, grad_f, empty_jac)
              .isApprox(Eigen::Vector3d(-1.5, 0.0, 0.0)));
    CHECK_THROWS_AS(arborescence_direction(Eigen::Vector2d(1, 2), grad_f, empty_jac),
                    std::invalid_argument);

    CHECK(normalize_gradient(Eigen::Vector3d(0, 0, 0)).norm() == 0.0);
    CHECK(normalize_gradient(Eigen::Vector3d(0, 3, 4)).norm() == doctest::Approx(1.0));
}

TEST_CASE("gradient emitter with zero step rate keeps the solution point still") {
    const auto domain = make_domain(DomainKind::LpSphere, 6);
    Archive archive(small_archive(0.01, 0.0, 5.12 * 3, 8));
    GradientArborescenceEmitter emitter(9, 6, Eigen::VectorXd::Zero(6), 2, 0.2, 0.0,
                                        StepOptimizerKind::GradientAscent, RankingMode::Annealed,
                                        RestartPolicy::basic());
    for (int step = 0; step < 5; ++step) {
        const auto report = emitter.step(archive, *domain);
        CHECK(report.evaluations == 7);  // branch batch plus the solution point
        if (report.restarted) break;
        CHECK(emitter.solution_point().norm() == 0.0);
    }
}

TEST_CASE("gradient emitter explores the sphere") {
    const auto domain = make_domain(DomainKind::LpSphere, 10);
    Archive archive(small_archive(0.01, 0.0, 5.12 * 5, 20));
    GradientArborescenceEmitter emitter(41, 18, Eigen::VectorXd::Zero(10), 2, 10.0, 1.0,
                                        StepOptimizerKind::GradientAscent, RankingMode::Annealed,
                                        RestartPolicy::basic());
    for (int step = 0; step < 150; ++step) emitter.step(archive, *domain);
    CHECK(archive.metrics().coverage > 0.2);
    CHECK(archive.metrics().best > 90.0);
}

TEST_CASE("ensemble accounting and determinism") {
    SUBCASE("zero iterations produce an empty series") {
        ExperimentConfig cfg = ExperimentConfig::defaults_for(DomainKind::LpSphere,
                                                              Algorithm::MapElites);
        cfg.dimension = 6;
        cfg.iterations = 0;
        cfg.trials = 1;
        cfg.emitters = 1;
        const auto result = run_trial(cfg, 0);
        CHECK(result.rows.empty());
        CHECK(result.finals.size() == 1);
    }
    SUBCASE("evaluation budget is emitters x batch x iterations") {
        ExperimentConfig cfg = ExperimentConfig::defaults_for(DomainKind::LpSphere,
                                                              Algorithm::CmaMae);
        cfg.dimension = 6;
        cfg.iterations = 4;
        cfg.emitters = 3;
        cfg.batch = 5;
        cfg.trials = 1;
        const auto result = run_trial(cfg, 0);
        CHECK(result.rows.back().evaluations == 4 * 3 * 5);

        ExperimentConfig dqd = ExperimentConfig::defaults_for(DomainKind::LpSphere,
                                                              Algorithm::CmaMaega);
        dqd.dimension = 6;
        dqd.iterations = 4;
        dqd.emitters = 3;
        dqd.batch = 5;
        dqd.trials = 1;
        const auto dqd_result = run_trial(dqd, 0);
        CHECK(dqd_result.rows.back().evaluations == 4 * 3 * (5 + 1));
    }
    SUBCASE("same seed, same series") {
        ExperimentConfig cfg = ExperimentConfig::defaults_for(DomainKind::ArmRepertoire,
                                                              Algorithm::MapElitesLine);
        cfg.dimension = 8;
        cfg.iterations = 20;
        cfg.emitters = 2;
        cfg.batch = 9;
        cfg.trials = 1;
        cfg.seed = 4242;
        const auto a = run_trial(cfg, 0);
        const auto b = run_trial(cfg, 0);
        REQUIRE(a.rows.size() == b.rows.size());
        for (size_t i = 0; i < a.rows.size(); ++i) {
            CHECK(a.rows[i].qd_score == b.rows[i].qd_score);
            CHECK(a.rows[i].coverage == b.rows[i].coverage);
        }
    }
    SUBCASE("coverage is non-decreasing for every algorithm") {
        for (Algorithm algorithm : {Algorithm::MapElites, Algorithm::MapElitesLine,
                                    Algorithm::CmaMe, Algorithm::CmaMae, Algorithm::CmaMega,
                                    Algorithm::CmaMaega}) {
            ExperimentConfig cfg = ExperimentConfig::defaults_for(DomainKind::LpSphere, algorithm);
            cfg.dimension = 6;
            cfg.iterations = 30;
            cfg.emitters = 1;
            cfg.batch = 8;
            cfg.trials = 1;
            cfg.resolution = {12, 12};
            const auto result = run_trial(cfg, 0);
            double cover = 0.0;
            for (const auto& row : result.rows) {
                CHECK(row.coverage >= cover);
                cover = row.coverage;
            }
        }
    }
}

TEST_CASE("annealed ranking equals density ranking on the plateau interior") {
    // Flat-objective behavior: with every candidate inside the plateau, the
    // annealed ranking must follow the per-cell visit counts.
    const auto domain = make_domain(DomainKind::LpPlateau, 6);
    Archive archive(small_archive(0.05, 0.0, 16.0, 16));
    EsEmitter emitter(77, 10, Eigen::VectorXd::Zero(6), 0.2, RankingMode::Annealed,
                      SelectionMode::Mu, RestartPolicy::basic());
    std::map<long, long> counts;
    for (int step = 0; step < 60; ++step) {
        const auto report = emitter.step(archive, *domain);
        std::vector<long> before(report.candidates.size());
        bool all_flat = true;
        for (size_t i = 0; i < report.candidates.size(); ++i) {
            before[i] = counts[report.candidates[i].cell_index];
            counts[report.candidates[i].cell_index] += 1;
            all_flat = all_flat && report.candidates[i].objective == 100.0;
        }
        if (!all_flat) continue;
        std::vector<int> expected(report.candidates.size());
        for (size_t i = 0; i < expected.size(); ++i) expected[i] = static_cast<int>(i);
        std::stable_sort(expected.begin(), expected.end(),
                         [&](int a, int b) { return before[a] < before[b]; });
        CHECK(report.ranking == expected);
    }
}
