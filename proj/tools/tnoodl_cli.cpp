// Command-line front end: synthetic experiments, decomposition of tensor
// files, standalone untangling and factor evaluation.
//
// Exit codes: 0 converged, 2 stopped without converging, 1 error.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tnoodl/tnoodl.hpp"

namespace fs = std::filesystem;
using namespace tnoodl;

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

// One --<key> option per SolverConfig field; applied after --config.
struct ConfigFlags {
  std::optional<std::string> config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key=value configuration file")
        ->check(CLI::ExistingFile);
    for (const auto& key : config_keys())
      app->add_option("--" + key, values[key], "override '" + key + "'");
  }

  SolverConfig resolve(CLI::App* app) const {
    SolverConfig cfg;
    if (config_path) cfg = load_config(*config_path);
    for (const auto& key : config_keys())
      if (app->count("--" + key) > 0) apply_setting(cfg, key, values.at(key));
    return cfg;
  }
};

int exit_code(const RunResult& run) {
  return run.stop == StopReason::Converged ? kExitConverged : kExitNotConverged;
}

void progress(const IterationRecord& r) {
  std::cerr << "t=" << r.t << " p=" << r.p << " err_A_max=" << format_double(r.err_A_max)
            << " err_X_relF=" << format_double(r.err_X_relF)
            << " data_fit=" << format_double(r.data_fit) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online CP decomposition of tensors with one incoherent and two sparse factors"};
  app.require_subcommand(1);

  // synth-run
  auto* synth = app.add_subcommand("synth-run", "synthetic online experiment with ground truth");
  ConfigFlags synth_flags;
  synth_flags.attach(synth);
  std::string synth_out = "run";
  bool synth_quiet = false;
  synth->add_option("--out", synth_out, "output directory")->capture_default_str();
  synth->add_flag("--quiet", synth_quiet, "no per-iteration progress on stderr");

  // decompose
  auto* decompose = app.add_subcommand("decompose", "decompose TNSR3 tensor files");
  ConfigFlags dec_flags;
  dec_flags.attach(decompose);
  std::string dec_out = "run";
  std::string dec_init;
  std::vector<std::string> dec_inputs;
  PreprocessOptions prep{false, false, false};
  bool dec_quiet = false;
  decompose->add_option("--init", dec_init, "initial dictionary (matrix CSV, n x m)")
      ->required()
      ->check(CLI::ExistingFile);
  decompose->add_option("tensors", dec_inputs, "TNSR3 files, one per iteration")
      ->required()
      ->check(CLI::ExistingFile);
  decompose->add_option("--out", dec_out, "output directory")->capture_default_str();
  decompose->add_flag("--log-compress", prep.log_compress, "map non-zeros v to log2(v) + 1");
  decompose->add_flag("--max-scale", prep.max_scale, "divide by the largest magnitude");
  decompose->add_flag("--center-fibers", prep.center_fibers, "subtract non-zero fiber means");
  decompose->add_flag("--quiet", dec_quiet, "no per-iteration progress on stderr");

  // untangle
  auto* untangle = app.add_subcommand("untangle", "split an S matrix (m x JK) into B and C");
  std::string un_s, un_b = "B.csv", un_c = "C.csv";
  std::size_t un_J = 0, un_K = 0;
  double un_tol = kDefaultSvdTol;
  untangle->add_option("--S", un_s, "matrix CSV, m x JK")->required()->check(CLI::ExistingFile);
  untangle->add_option("--J", un_J, "rows of B")->required();
  untangle->add_option("--K", un_K, "rows of C")->required();
  untangle->add_option("--svd_tol", un_tol)->capture_default_str();
  untangle->add_option("--out-B", un_b)->capture_default_str();
  untangle->add_option("--out-C", un_c)->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "compare an estimated factor against a reference");
  std::string ev_est, ev_ref;
  bool ev_normalize = false;
  eval->add_option("estimate", ev_est, "estimated factor (matrix CSV)")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("reference", ev_ref, "reference factor (matrix CSV)")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_flag("--normalize", ev_normalize,
                 "scale non-zero columns to unit norm first (sparse factors)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const SolverConfig cfg = synth_flags.resolve(synth);
      cfg.validate();
      const auto setup = make_synthetic_setup(cfg);
      SyntheticSource source(cfg, setup.A_star);
      const auto run = run_online(cfg, source, setup.A0,
                                  synth_quiet ? RecordSink{} : RecordSink{progress});
      emit_outputs(run, cfg, synth_out);
      write_matrix_csv(fs::path(synth_out) / "A_star.csv", setup.A_star);
      write_summary(std::cout, run);
      return exit_code(run);
    }

    if (decompose->parsed()) {
      SolverConfig cfg = dec_flags.resolve(decompose);
      const Matrix a0 = read_matrix_csv(dec_init);
      const DenseTensor3 first = ingest_tensor(dec_inputs.front());
      cfg.n = first.n();
      cfg.J = first.J();
      cfg.K = first.K();
      cfg.m = a0.cols();
      if (a0.rows() != cfg.n)
        throw DimensionError(detail::concat("initial dictionary has ", a0.rows(),
                                            " rows but tensors have n = ", cfg.n));
      if (decompose->count("--T_max") == 0 && cfg.mode == RunMode::Online)
        cfg.T_max = dec_inputs.size();
      std::vector<fs::path> paths(dec_inputs.begin(), dec_inputs.end());
      const bool any_prep = prep.log_compress || prep.max_scale || prep.center_fibers;
      FileSource source(std::move(paths),
                        any_prep ? std::optional<PreprocessOptions>(prep) : std::nullopt);
      const auto run =
          run_online(cfg, source, a0, dec_quiet ? RecordSink{} : RecordSink{progress});
      emit_outputs(run, cfg, dec_out);
      write_summary(std::cout, run);
      return exit_code(run);
    }

    if (untangle->parsed()) {
      const Matrix s = read_matrix_csv(un_s);
      const auto f = untangle_krp(s, un_J, un_K, un_tol);
      write_matrix_csv(un_b, f.B);
      write_matrix_csv(un_c, f.C);
      std::cout << "rows=" << s.rows() << " degenerate=" << f.degenerate_rows.size() << '\n';
      return kExitConverged;
    }

    if (eval->parsed()) {
      Matrix est = read_matrix_csv(ev_est);
      Matrix ref = read_matrix_csv(ev_ref);
      require_same_shape(est, ref, "eval");
      auto unit = [](Matrix m) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
          const double nrm = norm2(m.col(j));
          if (nrm > 0.0)
            for (double& v : m.col(j)) v /= nrm;
        }
        return m;
      };
      if (ev_normalize) {
        est = unit(est);
        ref = unit(ref);
      }
      const Alignment al = match_columns(est, ref);
      const ColumnErrors errs = column_errors(est, ref, al);
      std::cout << "max_col_err=" << format_double(errs.max_err) << '\n'
                << "mean_col_err=" << format_double(errs.mean_err) << '\n'
                << "rel_frobenius=" << format_double(rel_frobenius(apply_alignment(est, al), ref))
                << '\n'
                << "perm=";
      for (std::size_t j = 0; j < al.perm.size(); ++j)
        std::cout << (j ? "," : "") << al.perm[j] + 1;
      std::cout << "\nsigns=";
      for (std::size_t j = 0; j < al.signs.size(); ++j)
        std::cout << (j ? "," : "") << (al.signs[j] > 0 ? "+1" : "-1");
      std::cout << '\n';
      return kExitConverged;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
