#pragma once

// The online decomposition loop. Each iteration takes one tensor, estimates
// its sparse code against the current dictionary, untangles the sparse
// factors, and takes one approximate gradient step on the dictionary.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "tnoodl/config.hpp"
#include "tnoodl/dict_update.hpp"
#include "tnoodl/error.hpp"
#include "tnoodl/io.hpp"
#include "tnoodl/linalg.hpp"
#include "tnoodl/metrics.hpp"
#include "tnoodl/parallel.hpp"
#include "tnoodl/preprocess.hpp"
#include "tnoodl/sparse_coding.hpp"
#include "tnoodl/synth.hpp"
#include "tnoodl/tensor.hpp"
#include "tnoodl/untangle.hpp"

namespace tnoodl {

struct Observation {
  DenseTensor3 tensor;
  std::optional<GroundTruth> truth;
};

class TensorSource {
 public:
  virtual ~TensorSource() = default;
  // Observation for iteration t, or nullopt once the source is exhausted.
  virtual std::optional<Observation> next(std::size_t t) = 0;
  virtual bool has_ground_truth() const = 0;
};

// Fresh (B*, C*) per iteration from child streams of the run seed.
class SyntheticSource : public TensorSource {
 public:
  SyntheticSource(const SolverConfig& cfg, Matrix a_star)
      : dims_(cfg.dims()), sparsity_(cfg.sparsity()), dist_(cfg.dist), C_lb_(cfg.C_lb),
        seed_(cfg.seed), exec_{cfg.threads}, a_star_(std::move(a_star)) {}

  std::optional<Observation> next(std::size_t t) override {
    auto inst = gen_tensor_instance(dims_, sparsity_, dist_, C_lb_, a_star_,
                                    child_seed(seed_, StreamTag::Instance, t), exec_);
    return Observation{std::move(inst.tensor), std::move(inst.truth)};
  }
  bool has_ground_truth() const override { return true; }
  const Matrix& a_star() const { return a_star_; }

 private:
  Dims dims_;
  SparsityParams sparsity_;
  FactorDist dist_;
  double C_lb_;
  std::uint64_t seed_;
  Exec exec_;
  Matrix a_star_;
};

// Tensors from TNSR3 files, one per iteration in the given order.
class FileSource : public TensorSource {
 public:
  FileSource(std::vector<std::filesystem::path> paths, std::optional<PreprocessOptions> prep)
      : paths_(std::move(paths)), prep_(prep) {}

  std::optional<Observation> next(std::size_t t) override {
    if (t >= paths_.size()) return std::nullopt;
    DenseTensor3 z = ingest_tensor(paths_[t]);
    if (prep_) z = preprocess(z, *prep_);
    return Observation{std::move(z), std::nullopt};
  }
  bool has_ground_truth() const override { return false; }

 private:
  std::vector<std::filesystem::path> paths_;
  std::optional<PreprocessOptions> prep_;
};

struct IterationRecord {
  std::size_t t = 0;
  std::size_t p = 0;
  std::size_t p_indep = 0;
  double err_A_max = 0.0;
  double err_A_relF = 0.0;
  double err_X_relF = 0.0;
  bool signed_support_ok = true;
  double data_fit = 0.0;
  double err_B_max = 0.0;
  double err_C_max = 0.0;
  double min_descent_corr = 0.0;
  double wall_ms = 0.0;
  bool updated = false;  // false when the dictionary step was skipped
};

enum class StopReason { Converged, MaxIterations, SourceExhausted };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::SourceExhausted: return "source_exhausted";
  }
  return "unknown";
}

struct RunResult {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix X;
  ColumnIndexMap map;
  std::vector<IterationRecord> records;
  StopReason stop = StopReason::MaxIterations;
  std::size_t iterations = 0;
};

using RecordSink = std::function<void(const IterationRecord&)>;

inline constexpr std::string_view kMetricsHeader =
    "t,p,p_indep,err_A_max,err_A_relF,err_X_relF,signed_support_ok,data_fit,err_B_max,"
    "err_C_max,min_descent_corr,wall_ms";

inline void write_metrics_row(std::ostream& out, const IterationRecord& r) {
  out << r.t << ',' << r.p << ',' << r.p_indep << ',' << format_double(r.err_A_max) << ','
      << format_double(r.err_A_relF) << ',' << format_double(r.err_X_relF) << ','
      << (r.signed_support_ok ? 1 : 0) << ',' << format_double(r.data_fit) << ','
      << format_double(r.err_B_max) << ',' << format_double(r.err_C_max) << ','
      << format_double(r.min_descent_corr) << ',' << format_double(r.wall_ms) << '\n';
}

inline void write_metrics_csv(std::ostream& out, const std::vector<IterationRecord>& records) {
  out << kMetricsHeader << '\n';
  for (const auto& r : records) write_metrics_row(out, r);
}

namespace detail {

template <typename Fn>
decltype(auto) with_iteration_context(std::size_t t, Fn&& fn) {
  try {
    return fn();
  } catch (const CollapsedColumnError& e) {
    throw CollapsedColumnError(concat("iteration ", t, ": ", e.what()), e.column());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(concat("iteration ", t, ": ", e.what()), e.residual());
  } catch (const NumericError& e) {
    throw NumericError(concat("iteration ", t, ": ", e.what()));
  } catch (const DimensionError& e) {
    throw DimensionError(concat("iteration ", t, ": ", e.what()));
  }
}

// Sparse-factor reference with columns that carry no signal in this
// tensor (the partner factor column is zero) zeroed out.
inline Matrix effective_factor(const Matrix& f, const Matrix& partner) {
  Matrix out = f;
  for (std::size_t r = 0; r < f.cols(); ++r)
    if (norm2(partner.col(r)) == 0.0)
      for (double& v : out.col(r)) v = 0.0;
  return out;
}

}  // namespace detail

// Runs the online loop from the initial dictionary a0. With ground truth the
// loop stops once the aligned max column error reaches eps_T; without it,
// once the dictionary moves by at most eps_T in Frobenius norm. Every
// iteration is recorded; `sink`, if set, sees every log_every-th record and
// the last one.
inline RunResult run_online(const SolverConfig& cfg, TensorSource& source, const Matrix& a0,
                            const RecordSink& sink = {}) {
  cfg.validate();
  if (a0.rows() != cfg.n || a0.cols() != cfg.m)
    throw DimensionError(detail::concat("run_online: initial dictionary is ", shape_str(a0),
                                        ", expected ", cfg.n, "x", cfg.m));
  const Exec exec{cfg.threads};
  const IhtParams iht_params = cfg.iht_params();
  const double eta_A = cfg.dict_step();
  const auto indep = independent_column_indices(cfg.J, cfg.K);

  RunResult result;
  result.A = normalize_columns(a0);
  std::optional<Observation> batch_obs;

  bool last_sent = false;
  auto emit = [&](const IterationRecord& rec, bool last) {
    result.records.push_back(rec);
    last_sent = last || rec.t % cfg.log_every == 0;
    if (sink && last_sent) sink(rec);
  };

  for (std::size_t t = 0; t < cfg.T_max; ++t) {
    const auto started = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.t = t;

    std::optional<Observation> fresh;
    if (cfg.mode == RunMode::Batch) {
      if (!batch_obs) batch_obs = source.next(0);
    } else {
      fresh = source.next(t);
    }
    const std::optional<Observation>& obs = cfg.mode == RunMode::Batch ? batch_obs : fresh;
    if (!obs) {
      result.stop = StopReason::SourceExhausted;
      if (!result.records.empty() && sink && !last_sent) sink(result.records.back());
      return result;
    }
    const DenseTensor3& z = obs->tensor;
    if (z.n() != cfg.n || z.J() != cfg.J || z.K() != cfg.K)
      throw DimensionError(detail::concat("iteration ", t, ": tensor is ", z.n(), "x", z.J(),
                                          "x", z.K(), ", expected ", cfg.n, "x", cfg.J, "x",
                                          cfg.K));

    const Matrix& A = result.A;
    const auto extracted = extract_nonzero_columns(mode1_unfold(z), cfg.J, cfg.zero_tol);
    const Matrix& Y = extracted.Y;
    const ColumnIndexMap& map = extracted.map;
    rec.p = map.size();

    std::vector<std::size_t> indep_cols;  // positions within Y
    for (std::size_t c = 0, q = 0; c < map.kept.size() && q < indep.size();) {
      if (map.kept[c] == indep[q]) { indep_cols.push_back(c); ++c; ++q; }
      else if (map.kept[c] < indep[q]) ++c;
      else ++q;
    }
    rec.p_indep = indep_cols.size();

    Matrix X(cfg.m, 0), B(cfg.J, cfg.m), C(cfg.K, cfg.m), g;
    bool have_grad = false;
    if (rec.p > 0) {
      detail::with_iteration_context(t, [&] {
        X = iht(A, Y, init_code(A, Y, cfg.C_lb), iht_params, exec);
        auto untangled = untangle_krp(scatter_columns(X, map), cfg.J, cfg.K, cfg.svd_tol, exec);
        B = std::move(untangled.B);
        C = std::move(untangled.C);
        if (cfg.sample_mode == SampleMode::AllNonzero) {
          g = gradient(A, X, Y, exec);
          have_grad = true;
        } else if (!indep_cols.empty()) {
          Matrix xs(cfg.m, indep_cols.size()), ys(cfg.n, indep_cols.size());
          for (std::size_t q = 0; q < indep_cols.size(); ++q) {
            auto xsrc = X.col(indep_cols[q]);
            auto ysrc = Y.col(indep_cols[q]);
            std::copy(xsrc.begin(), xsrc.end(), xs.col(q).begin());
            std::copy(ysrc.begin(), ysrc.end(), ys.col(q).begin());
          }
          g = gradient(A, xs, ys, exec);
          have_grad = true;
        }
      });
    }

    bool converged = false;
    if (obs->truth) {
      const GroundTruth& gt = *obs->truth;
      const Alignment al = match_columns(A, gt.A_star);
      const ColumnErrors errs = column_errors(A, gt.A_star, al);
      rec.err_A_max = errs.max_err;
      rec.err_A_relF = rel_frobenius(apply_alignment(A, al), gt.A_star);
      if (rec.p > 0) {
        const Matrix s_star = gt.S_star();
        Matrix x_star(cfg.m, rec.p);
        for (std::size_t c = 0; c < rec.p; ++c)
          for (std::size_t r = 0; r < cfg.m; ++r) x_star(r, c) = s_star(r, map.kept[c]);
        const Matrix x_aligned = apply_alignment_rows(X, al);
        rec.err_X_relF = rel_frobenius(x_aligned, x_star);
        rec.signed_support_ok = signed_support_equal(x_aligned, x_star);
        rec.data_fit = data_fit(Y, A, X);
        rec.err_B_max =
            normalized_factor_errors(B, detail::effective_factor(gt.B_star, gt.C_star), al).max_err;
        rec.err_C_max =
            normalized_factor_errors(C, detail::effective_factor(gt.C_star, gt.B_star), al).max_err;
      }
      if (have_grad) {
        double lowest = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cfg.m; ++j) {
          const std::size_t i = al.perm[j];
          std::vector<double> target(gt.A_star.col(j).begin(), gt.A_star.col(j).end());
          for (double& v : target) v *= al.signs[j];
          lowest = std::min(lowest, resolved_descent_correlation(g.col(i), A.col(i), target));
        }
        rec.min_descent_corr = lowest;
      }
      converged = rec.err_A_max <= cfg.eps_T;
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      rec.err_A_max = rec.err_A_relF = rec.err_X_relF = nan;
      rec.err_B_max = rec.err_C_max = rec.min_descent_corr = nan;
      rec.data_fit = rec.p > 0 ? data_fit(Y, A, X) : 0.0;
    }

    if (!converged && have_grad) {
      Matrix next = detail::with_iteration_context(t, [&] { return step_and_normalize(A, g, eta_A); });
      rec.updated = true;
      if (!obs->truth) converged = frobenius_norm(next - A) <= cfg.eps_T;
      result.A = std::move(next);
    }

    result.X = std::move(X);
    result.B = std::move(B);
    result.C = std::move(C);
    result.map = map;
    result.iterations = t + 1;
    if (cfg.record_wall_time)
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              started).count();
    const bool last = converged || t + 1 == cfg.T_max;
    emit(rec, last);
    if (converged) {
      result.stop = StopReason::Converged;
      return result;
    }
  }
  result.stop = StopReason::MaxIterations;
  return result;
}

// Dictionary, synthetic source and initial estimate for a synthetic run.
struct SyntheticSetup {
  Matrix A_star;
  Matrix A0;
};

inline SyntheticSetup make_synthetic_setup(const SolverConfig& cfg) {
  SyntheticSetup s;
  s.A_star = gen_dictionary(cfg.n, cfg.m, cfg.seed);
  s.A0 = perturb_init(s.A_star, cfg.init_distance(), cfg.seed);
  return s;
}

// Writes metrics.csv, A.csv, B.csv, C.csv and config.txt into out_dir.
inline void emit_outputs(const RunResult& run, const SolverConfig& cfg,
                         const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(detail::concat("cannot create ", out_dir.string(), ": ", ec.message()));
  {
    auto out = detail::open_out(out_dir / "metrics.csv");
    write_metrics_csv(out, run.records);
    if (!out) throw Error(detail::concat("write failed: ", (out_dir / "metrics.csv").string()));
  }
  write_matrix_csv(out_dir / "A.csv", run.A);
  write_matrix_csv(out_dir / "B.csv", run.B);
  write_matrix_csv(out_dir / "C.csv", run.C);
  {
    auto out = detail::open_out(out_dir / "config.txt");
    write_config(out, cfg);
    if (!out) throw Error(detail::concat("write failed: ", (out_dir / "config.txt").string()));
  }
}

inline void write_summary(std::ostream& out, const RunResult& run) {
  out << "stop=" << to_string(run.stop) << " iterations=" << run.iterations;
  if (!run.records.empty()) {
    const auto& r = run.records.back();
    out << " err_A_max=" << format_double(r.err_A_max)
        << " err_A_relF=" << format_double(r.err_A_relF)
        << " err_X_relF=" << format_double(r.err_X_relF)
        << " signed_support_ok=" << (r.signed_support_ok ? "true" : "false");
  }
  out << '\n';
}

}  // namespace tnoodl
