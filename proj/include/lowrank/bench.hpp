#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "lowrank/drivers.hpp"
#include "lowrank/matop.hpp"
#include "lowrank/matrix_market.hpp"
#include "lowrank/nystrom.hpp"
#include "lowrank/specnorm.hpp"
#include "lowrank/testgen.hpp"

/**
 * @file bench.hpp
 * @brief Accuracy/runtime sweeps.
 *
 * Every (parameter tuple, trial) produces one CSV row holding the
 * spectral-norm error of the factorization (power-method estimate), the
 * Frobenius error as a side statistic, and the wall time of the
 * factorization alone. Plot-data files hold one (runtime, error) point per
 * parameter setting, averaged over trials, one file per curve.
 */

namespace lowrank {

/// Power iterations behind each recorded error. When the leading singular
/// values of A - U·S·Vᴴ nearly coincide, the estimate needs this many to
/// settle within 1e-10 of the true norm.
inline constexpr int kBenchNormIterations = 1000;

inline constexpr const char* kCsvHeader = "method,dist,m,n,k,l,its,trial,seed,err,fro_err,runtime_sec,alpha";

enum class Method { rsvd, rpca, reig, nystrom };

inline const char* method_name(Method m) {
    switch (m) {
    case Method::rsvd:
        return "rsvd";
    case Method::rpca:
        return "rpca";
    case Method::reig:
        return "reig";
    case Method::nystrom:
        return "nystrom";
    }
    return "?";
}

inline std::optional<Method> parse_method(const std::string& s) {
    for (Method m : {Method::rsvd, Method::rpca, Method::reig, Method::nystrom}) {
        if (s == method_name(m)) {
            return m;
        }
    }
    return std::nullopt;
}

inline bool needs_self_adjoint(Method m) { return m == Method::reig || m == Method::nystrom; }

/// (nnz / (m·n)) · (k / max(m, n)).
inline double sparsity_score(Index nnz, Index m, Index n, Index k) {
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    return (static_cast<double>(nnz) / (md * nd)) * (static_cast<double>(k) / std::max(md, nd));
}

/// Number of nonzero entries of the matrix behind `op` (dense or sparse).
inline Index count_nonzeros(const LinearOperator& op) {
    if (const SparseMatrix* s = op.sparse_storage()) {
        return s->logical_nnz();
    }
    if (const Matrix* d = op.dense_storage()) {
        return (d->array() != 0.0).count();
    }
    return op.rows() * op.cols();
}

struct BenchRecord {
    std::string method;
    std::string dist;
    Index m = 0;
    Index n = 0;
    Index k = 0;
    Index l = 0;
    int its = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    double err = 0.0;
    double fro_err = 0.0;
    double runtime_sec = 0.0;
    double alpha = 0.0;
    /// Set for tuples that threw; numeric result fields are then blank.
    bool failed = false;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

inline std::string to_csv_row(const BenchRecord& r) {
    std::ostringstream os;
    os << r.method << ',' << csv_quote(r.dist) << ',' << r.m << ',' << r.n << ',' << r.k << ',' << r.l << ','
       << r.its << ',' << r.trial << ',' << r.seed << ',';
    if (r.failed) {
        os << "ERROR,,," << format_double(r.alpha);
    } else {
        os << format_double(r.err) << ',' << format_double(r.fro_err) << ',' << format_double(r.runtime_sec) << ','
           << format_double(r.alpha);
    }
    return os.str();
}

/// Append-only CSV sink; writes the header on construction.
class CsvAppender {
public:
    explicit CsvAppender(std::ostream& out) : out_(out) { out_ << kCsvHeader << '\n'; }

    void append(const BenchRecord& r) {
        out_ << to_csv_row(r) << '\n';
        out_.flush();
        records_.push_back(r);
    }

    const std::vector<BenchRecord>& records() const { return records_; }

private:
    std::ostream& out_;
    std::vector<BenchRecord> records_;
};

/// Result of one factorization together with the operator it approximates.
struct MethodRun {
    LinearOperator target;
    std::variant<LowRankSVD, EigenApprox> factors;
    double runtime_sec = 0.0;
};

/// Runs `method` on `op`, timing the factorization only. rpca centers.
inline MethodRun run_method(Method method, const LinearOperator& op, const SketchConfig& cfg) {
    const LinearOperator target = method == Method::rpca ? centered(op) : op;
    const auto start = std::chrono::steady_clock::now();
    std::variant<LowRankSVD, EigenApprox> factors;
    switch (method) {
    case Method::rsvd:
    case Method::rpca:
        factors = rsvd(target, cfg);
        break;
    case Method::reig:
        factors = reig(target, cfg);
        break;
    case Method::nystrom:
        factors = nystrom(target, cfg);
        break;
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    return MethodRun{target, std::move(factors), std::max(elapsed.count(), 1e-9)};
}

inline LinearOperator residual_operator(const MethodRun& run) {
    return std::visit([&](const auto& f) { return residual_operator(run.target, f); }, run.factors);
}

/// Fills err and fro_err of `rec` from `run`.
inline void measure(const MethodRun& run, int norm_its, std::uint64_t seed, BenchRecord& rec) {
    const LinearOperator residual = residual_operator(run);
    rec.err = snorm(residual, norm_its, seed).value;
    rec.fro_err = std::sqrt(residual.frobenius_norm_squared());
    rec.runtime_sec = run.runtime_sec;
}

struct DenseSuiteConfig {
    std::vector<Method> methods{Method::rsvd};
    std::vector<Distribution> dists{Distribution::inv_j, Distribution::step, Distribution::exp_decay,
                                    Distribution::exp_decay_cut, Distribution::linear};
    std::vector<std::pair<Index, Index>> sizes{{1000, 1000}};
    std::vector<Index> ks{10};
    std::vector<Index> oversamples{2, 4, 8, 16, 32};
    std::vector<int> its_list{2};
    int trials = 10;
    std::uint64_t seed_base = 0;
    int norm_its = kBenchNormIterations;
};

struct SparseSuiteConfig {
    std::vector<Method> methods{Method::rsvd};
    std::vector<std::string> inputs;
    std::vector<Index> ks{10};
    std::vector<Index> oversamples{2};
    std::vector<int> its_list{2, 5, 8};
    int trials = 1;
    std::uint64_t seed_base = 0;
    int norm_its = kBenchNormIterations;
};

/// Label for the decade bin [10^e, 10^(e+1)) holding α.
inline std::string alpha_bin_label(double alpha) {
    if (!(alpha > 0.0)) {
        return "alpha_0";
    }
    const int e = static_cast<int>(std::floor(std::log10(alpha)));
    char buf[48];
    std::snprintf(buf, sizeof buf, "alpha_1e%+03d_1e%+03d", e, e + 1);
    return buf;
}

namespace bench_detail {

inline void run_tuple(CsvAppender& csv, std::ostream& log, BenchRecord rec, Method method,
                      const LinearOperator& op, int norm_its) {
    try {
        const SketchConfig cfg{rec.k, rec.l, rec.its, rec.seed};
        const MethodRun run = run_method(method, op, cfg);
        measure(run, norm_its, detail::mix_seed(rec.seed, 31), rec);
    } catch (const std::exception& e) {
        rec.failed = true;
        log << "error: " << rec.method << ' ' << rec.dist << " k=" << rec.k << " l=" << rec.l
            << " its=" << rec.its << " trial=" << rec.trial << ": " << e.what() << '\n';
    }
    csv.append(rec);
}

} // namespace bench_detail

/// Synthetic dense sweep. Trial t uses seed seed_base + t for both the
/// matrix and the sketch. Self-adjoint methods get a nonnegative-definite
/// matrix with the same spectrum.
inline void run_dense_suite(const DenseSuiteConfig& cfg, CsvAppender& csv, std::ostream& log) {
    for (Distribution dist : cfg.dists) {
        const std::string dist_label = std::to_string(static_cast<int>(dist));
        for (const auto& [m, n] : cfg.sizes) {
            for (Index k : cfg.ks) {
                for (int trial = 0; trial < cfg.trials; ++trial) {
                    const std::uint64_t seed = cfg.seed_base + static_cast<std::uint64_t>(trial);
                    const SpectrumSpec spec{dist, m, n, k};
                    std::optional<LinearOperator> general, psd;
                    std::string gen_error;
                    for (Method method : cfg.methods) {
                        std::optional<LinearOperator>* slot = needs_self_adjoint(method) ? &psd : &general;
                        try {
                            if (!*slot) {
                                *slot = LinearOperator(needs_self_adjoint(method) ? synth_psd(spec, seed).a
                                                                                  : synth(spec, seed).a);
                            }
                        } catch (const std::exception& e) {
                            gen_error = e.what();
                        }
                        for (Index os : cfg.oversamples) {
                            for (int its : cfg.its_list) {
                                BenchRecord rec;
                                rec.method = method_name(method);
                                rec.dist = dist_label;
                                rec.m = m;
                                rec.n = n;
                                rec.k = k;
                                rec.l = k + os;
                                rec.its = its;
                                rec.trial = trial;
                                rec.seed = seed;
                                rec.alpha = sparsity_score(m * n, m, n, k);
                                if (!*slot) {
                                    rec.failed = true;
                                    log << "error: cannot generate dist " << dist_label << ": " << gen_error << '\n';
                                    csv.append(rec);
                                    continue;
                                }
                                bench_detail::run_tuple(csv, log, rec, method, **slot, cfg.norm_its);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Sweep over Matrix Market files. Prints α for every (file, k).
inline void run_sparse_suite(const SparseSuiteConfig& cfg, CsvAppender& csv, std::ostream& log,
                             std::ostream& out) {
    for (const std::string& path : cfg.inputs) {
        std::optional<LinearOperator> op;
        try {
            op = read_matrix_market(path);
        } catch (const std::exception& e) {
            log << "error: " << path << ": " << e.what() << '\n';
        }
        const Index nnz = op ? count_nonzeros(*op) : 0;
        for (Index k : cfg.ks) {
            BenchRecord base;
            base.dist = path;
            base.k = k;
            if (op) {
                base.m = op->rows();
                base.n = op->cols();
                base.alpha = sparsity_score(nnz, base.m, base.n, k);
                out << "alpha " << path << " k=" << k << ' ' << format_double(base.alpha) << '\n';
            }
            for (Method method : cfg.methods) {
                for (Index os : cfg.oversamples) {
                    for (int its : cfg.its_list) {
                        for (int trial = 0; trial < cfg.trials; ++trial) {
                            BenchRecord rec = base;
                            rec.method = method_name(method);
                            rec.l = k + os;
                            rec.its = its;
                            rec.trial = trial;
                            rec.seed = cfg.seed_base + static_cast<std::uint64_t>(trial);
                            if (!op) {
                                rec.failed = true;
                                csv.append(rec);
                                continue;
                            }
                            bench_detail::run_tuple(csv, log, rec, method, *op, cfg.norm_its);
                        }
                    }
                }
            }
        }
    }
}

/**
 * Writes one two-column (runtime_sec, err) file per curve into `dir`.
 * Dense curves are keyed by (method, dist, m, n, k); sparse curves by
 * (method, k, α decade). Points average successful trials of each
 * (input, l, its) setting.
 */
inline std::vector<std::filesystem::path> write_plot_data(const std::vector<BenchRecord>& records,
                                                          const std::filesystem::path& dir, bool sparse) {
    using PointKey = std::tuple<std::string, Index, int>;  // input, l, its
    struct Accum {
        double runtime = 0.0;
        double err = 0.0;
        int count = 0;
    };
    std::map<std::string, std::map<PointKey, Accum>> curves;
    for (const BenchRecord& r : records) {
        if (r.failed) {
            continue;
        }
        std::string name = r.method;
        if (sparse) {
            name += "_k" + std::to_string(r.k) + "_" + alpha_bin_label(r.alpha);
        } else {
            name += "_dist" + r.dist + "_m" + std::to_string(r.m) + "_n" + std::to_string(r.n) + "_k" +
                    std::to_string(r.k);
        }
        Accum& a = curves[name][PointKey{r.dist, r.l, r.its}];
        a.runtime += r.runtime_sec;
        a.err += r.err;
        ++a.count;
    }

    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (const auto& [name, points] : curves) {
        const auto path = dir / (name + ".dat");
        std::ofstream out(path);
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
        out << "# runtime_sec err\n";
        for (const auto& [key, a] : points) {
            out << format_double(a.runtime / a.count) << ' ' << format_double(a.err / a.count) << '\n';
        }
        written.push_back(path);
    }
    return written;
}

} // namespace lowrank
