#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "coxmono/bootstrap.hpp"
#include "coxmono/errors.hpp"
#include "coxmono/gof_tests.hpp"
#include "coxmono/parallel.hpp"
#include "coxmono/random.hpp"
#include "coxmono/scenario.hpp"

namespace coxmono {

/// A named simulation design from the level/power tables.
struct RegisteredScenario {
    std::string name;
    Scenario scenario;
    bool null_hypothesis = true;
};

/// The nine designs: five Weibull nulls and four non-Weibull alternatives,
/// beta_0 = 0.5, with (eps; M; tau) as listed in the tables.
inline std::vector<RegisteredScenario> scenario_registry() {
    auto make = [](std::string name, Baseline b, double eps, double M, double tau, bool null) {
        Scenario s;
        s.baseline = b;
        s.beta = {0.5};
        s.window = {eps, M};
        s.censor_tau = tau;
        return RegisteredScenario{std::move(name), s, null};
    };
    return {
        make("weibull(5;0.5)", WeibullBaseline{5.0, 0.5}, 0.1, 0.5, 0.7, true),
        make("weibull(1;0.1)", WeibullBaseline{1.0, 0.1}, 0.5, 4.5, 7.0, true),
        make("weibull(1;0.9)", WeibullBaseline{1.0, 0.9}, 0.5, 2.5, 3.5, true),
        make("weibull(1;0.5)", WeibullBaseline{1.0, 0.5}, 0.5, 2.5, 3.5, true),
        make("weibull(0.1;0.5)", WeibullBaseline{0.1, 0.5}, 1.0, 30.0, 35.0, true),
        make("altA(c=1)", AltABaseline{1.0}, 0.1, 5.0, 6.0, false),
        make("altA(c=6)", AltABaseline{6.0}, 1.0, 30.0, 35.0, false),
        make("altB(c=1)", AltBBaseline{1.0}, 0.1, 1.1, 1.3, false),
        make("altB(c=3)", AltBBaseline{3.0}, 0.1, 0.5, 0.6, false),
    };
}

inline const RegisteredScenario& find_scenario(const std::vector<RegisteredScenario>& reg, const std::string& name) {
    for (const auto& r : reg)
        if (r.name == name) return r;
    throw DataError("unknown scenario '" + name + "'");
}

struct StudyConfig {
    std::string name;
    Scenario scenario;
    TestConfig cfg;
    std::vector<std::size_t> n_list;
    std::size_t outer_reps = 200;
    std::uint64_t master_seed = 1;
    std::vector<Statistic> stats{Statistic::T, Statistic::LR, Statistic::S};
    unsigned threads = 1;

    void validate() const {
        scenario.validate();
        cfg.validate();
        if (outer_reps < 1) throw DataError("outer_reps must be >= 1");
        if (cfg.B < 20) throw DataError("B must be >= 20");
        if (n_list.empty()) throw DataError("n_list is empty");
        if (stats.empty()) throw DataError("no statistics requested");
    }
};

struct StudyRow {
    std::string scenario;
    std::size_t n = 0;
    std::string variant;
    Statistic stat = Statistic::T;
    double rejection_rate = 0.0;
    double stderr_ = 0.0;
    std::size_t N = 0;  // successful outer replications
    std::size_t B = 0;
    std::uint64_t master_seed = 0;
    std::size_t failures = 0;
    bool aborted = false;
};

inline std::string variant_name(const TestConfig& cfg) { return cfg.split_ratio < 1.0 ? "split" : "nosplit"; }

/// Seeds: dataset r at sample size n is drawn with
/// derive_seed(master, n, r); its bootstrap uses derive_seed(master, r),
/// so the same replicate index shares bootstrap streams across n.
inline std::vector<StudyRow> run_study(const StudyConfig& study) {
    study.validate();
    std::vector<StudyRow> rows;
    for (std::size_t n : study.n_list) {
        Scenario sc = study.scenario;
        sc.n = n;
        struct Outcome {
            std::vector<bool> reject;
            bool ok = false;
        };
        std::vector<Outcome> outcomes(study.outer_reps);
        parallel_for(study.outer_reps, study.threads, [&](std::size_t r) {
            try {
                const Dataset data = sample(sc, derive_seed(study.master_seed, n, r));
                const auto reports = bootstrap_tests(data, study.cfg, study.stats, derive_seed(study.master_seed, r));
                for (const auto& rep : reports) outcomes[r].reject.push_back(rep.reject);
                outcomes[r].ok = true;
            } catch (const std::exception&) {
                outcomes[r].ok = false;
            }
        });
        std::size_t ok = 0;
        for (const auto& o : outcomes) ok += o.ok ? 1 : 0;
        const std::size_t failures = study.outer_reps - ok;
        const bool aborted = static_cast<double>(failures) > 0.05 * static_cast<double>(study.outer_reps);
        for (std::size_t k = 0; k < study.stats.size(); ++k) {
            StudyRow row;
            row.scenario = study.name.empty() ? study.scenario.baseline.describe() : study.name;
            row.n = n;
            row.variant = variant_name(study.cfg);
            row.stat = study.stats[k];
            row.B = study.cfg.B;
            row.master_seed = study.master_seed;
            row.failures = failures;
            row.N = ok;
            row.aborted = aborted || ok == 0;
            if (!row.aborted) {
                std::size_t rejections = 0;
                for (const auto& o : outcomes)
                    if (o.ok && o.reject[k]) ++rejections;
                row.rejection_rate = static_cast<double>(rejections) / static_cast<double>(ok);
                row.stderr_ =
                    std::sqrt(row.rejection_rate * (1.0 - row.rejection_rate) / static_cast<double>(ok));
            } else {
                row.rejection_rate = std::nan("");
                row.stderr_ = std::nan("");
            }
            rows.push_back(row);
        }
    }
    return rows;
}

inline void write_study_csv_header(std::ostream& out) {
    out << "scenario,n,variant,statistic,rejection_rate,stderr,N,B,master_seed\n";
}

inline void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows) {
    for (const auto& r : rows)
        out << r.scenario << ',' << r.n << ',' << r.variant << ',' << to_string(r.stat) << ','
            << (r.aborted ? std::string("NA") : detail::format_double(r.rejection_rate)) << ','
            << (r.aborted ? std::string("NA") : detail::format_double(r.stderr_)) << ',' << r.N << ',' << r.B << ','
            << r.master_seed << '\n';
}

struct TableScale {
    std::vector<std::size_t> n_list;
    std::size_t outer_reps = 0;
    std::size_t B = 0;

    static TableScale desk() { return {{500, 1000}, 200, 199}; }
    static TableScale full() { return {{2000, 4000}, 1000, 1000}; }
};

inline TableScale parse_scale(const std::string& s) {
    if (s == "desk") return TableScale::desk();
    if (s == "full") return TableScale::full();
    throw DataError("scale must be desk or full");
}

/// One table: level or power designs, split (r = 1/2) or not.
struct TablePlan {
    std::string file;
    bool null_designs;
    double split_ratio;
};

inline std::vector<TablePlan> table_plans() {
    return {{"table1_level_split.csv", true, 0.5},
            {"table2_level_nosplit.csv", true, 1.0},
            {"table3_power_split.csv", false, 0.5},
            {"table4_power_nosplit.csv", false, 1.0}};
}

/// Studies making up one table at the given scale.
inline std::vector<StudyConfig> table_studies(const TablePlan& plan, const TableScale& scale,
                                              std::uint64_t master_seed, unsigned threads) {
    std::vector<StudyConfig> out;
    for (const auto& reg : scenario_registry()) {
        if (reg.null_hypothesis != plan.null_designs) continue;
        StudyConfig st;
        st.name = reg.name;
        st.scenario = reg.scenario;
        st.cfg.window = reg.scenario.window;
        st.cfg.split_ratio = plan.split_ratio;
        st.cfg.B = scale.B;
        st.n_list = scale.n_list;
        st.outer_reps = scale.outer_reps;
        st.master_seed = master_seed;
        st.threads = threads;
        out.push_back(std::move(st));
    }
    return out;
}

/// Runs all four tables and writes one CSV per table into `out_dir`.
/// Returns the total number of data rows written.
inline std::size_t paper_tables(const TableScale& scale, const std::filesystem::path& out_dir,
                                std::uint64_t master_seed, unsigned threads) {
    std::filesystem::create_directories(out_dir);
    std::size_t total = 0;
    for (const auto& plan : table_plans()) {
        std::ofstream out(out_dir / plan.file);
        if (!out) throw DataError("cannot write " + (out_dir / plan.file).string());
        write_study_csv_header(out);
        for (const auto& st : table_studies(plan, scale, master_seed, threads)) {
            const auto rows = run_study(st);
            write_study_csv(out, rows);
            total += rows.size();
        }
    }
    return total;
}

}  // namespace coxmono
