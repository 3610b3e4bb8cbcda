#include "wavebound/app.hpp"

#include "wavebound/config.hpp"
#include "wavebound/evaluation.hpp"
#include "wavebound/theorem.hpp"
#include "wavebound/trainer.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace wavebound::app {

namespace fs = std::filesystem;

namespace {

int guarded(std::ostream &err, std::function<void()> const &body)
{
  try {
    body();
    return static_cast<int>(ExitCode::Ok);
  } catch (ConfigError const &e) {
    err << "config error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Config);
  } catch (DataError const &e) {
    err << "data error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Data);
  } catch (IoError const &e) {
    err << "i/o error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Data);
  } catch (NumericError const &e) {
    err << "numeric failure: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Numeric);
  }
}

KeyValueConfig load_config(std::optional<fs::path> const &path, std::vector<std::string> const &overrides)
{
  KeyValueConfig cfg;
  if (path) {
    if (!fs::exists(*path)) {
      throw ConfigError("config file '" + path->string() + "' does not exist");
    }
    cfg = KeyValueConfig::from_file(*path);
  }
  for (auto const &o : overrides) {
    cfg.assign(o);
  }
  return cfg;
}

void ensure_dir(fs::path const &dir)
{
  if (dir.empty()) {
    throw ConfigError("an output directory is required");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  }
}

void write_text(fs::path const &path, std::string const &text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  out << text;
}

void report_warnings(std::vector<std::string> const &warnings, std::ostream &err)
{
  for (auto const &w : warnings) {
    err << "warning: " << w << '\n';
  }
}

FlatWindows const &pick_split(PreparedData const &data, std::string const &split)
{
  if (split == "train") {
    return data.train;
  }
  if (split == "val") {
    return data.val;
  }
  if (split == "test") {
    return data.test;
  }
  throw ConfigError("split must be train, val or test, got '" + split + "'");
}

} // namespace

int cmd_synth(SynthOptions const &opt, std::ostream &out, std::ostream &err)
{
  return guarded(err, [&] {
    if (opt.length < 1) {
      throw ConfigError("length must be >= 1");
    }
    if (opt.out.empty()) {
      throw ConfigError("--out is required");
    }
    auto const data = synth_series(opt.length, opt.sigma, opt.seed);
    if (opt.out.has_parent_path()) {
      ensure_dir(opt.out.parent_path());
    }
    write_csv(data, opt.out);
    out << "T=" << data.length() << " K=" << data.features() << '\n';
  });
}

int cmd_train(TrainOptions const &opt, std::ostream &out, std::ostream &err)
{
  return guarded(err, [&] {
    auto const cfg = resolve(load_config(opt.config, opt.overrides), training_defaults());
    auto const tc = train_config_from(cfg);
    auto const data = prepare_data(cfg);
    report_warnings(data.warnings, err);
    ensure_dir(opt.out_dir);
    write_text(opt.out_dir / "config.txt", cfg.serialize());

    auto const result = train(tc, data.train, data.val, data.test);
    bool const timing = cfg.get_bool("log_timing", false);
    write_log_csv(opt.out_dir / "train_log.csv", result.log, timing);
    write_log_jsonl(opt.out_dir / "train_log.jsonl", result.log, timing);
    write_gap_csv(opt.out_dir / "generalization_gap.csv", result.log);
    checkpoint_save(opt.out_dir / "checkpoint.bin", result.source, result.mirror);

    std::ostringstream metrics;
    write_metrics_header(metrics);
    write_metrics_row(metrics, "train", evaluate(result.chosen, data.train));
    write_metrics_row(metrics, "val", evaluate(result.chosen, data.val));
    if (!data.test.empty()) {
      auto const test = evaluate(result.chosen, data.test);
      write_metrics_row(metrics, "test", test);
      write_per_step_csv(opt.out_dir / "per_step_error.csv", test.per_step_mse);
    }
    write_text(opt.out_dir / "metrics.csv", metrics.str());

    auto const steps = cfg.get_int("slice_steps", 0);
    if (steps > 0 && !data.test.empty()) {
      auto const slice = loss_slice(result.chosen, static_cast<std::uint64_t>(cfg.get_int("slice_seed", 1)),
                                    cfg.get_double("slice_radius", 1.0), static_cast<int>(steps), data.test);
      write_slice_csv(opt.out_dir / "loss_slice.csv", slice);
    }
    out << "objective=" << to_string(tc.objective.kind) << " epochs=" << result.log.epochs.size()
        << " best_epoch=" << result.log.best_epoch << " eval_network=" << to_string(tc.eval_network) << '\n';
    out << metrics.str();
  });
}

int cmd_sweep(SweepOptions const &opt, std::ostream &out, std::ostream &err)
{
  return guarded(err, [&] {
    auto const eq = opt.grid.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("grid must look like epsilon=0.01,0.001");
    }
    auto const param = parse_sweep_param(opt.grid.substr(0, eq));
    auto const grid = parse_double_list(opt.grid.substr(eq + 1));
    if (grid.empty()) {
      throw ConfigError("sweep grid is empty");
    }
    if (opt.workers < 1) {
      throw ConfigError("workers must be >= 1");
    }
    auto const cfg = resolve(load_config(opt.config, opt.overrides), training_defaults());
    auto const tc = train_config_from(cfg);
    auto const data = prepare_data(cfg);
    report_warnings(data.warnings, err);
    ensure_dir(opt.out_dir);
    write_text(opt.out_dir / "config.txt", cfg.serialize() + "grid=" + opt.grid + "\n");
    auto const rows = sweep(tc, param, grid, data.train, data.val, data.test, opt.workers);
    write_sweep_csv(opt.out_dir / "sweep.csv", param, rows);
    std::ifstream in(opt.out_dir / "sweep.csv");
    out << in.rdbuf();
  });
}

int cmd_eval(EvalOptions const &opt, std::ostream &out, std::ostream &err)
{
  return guarded(err, [&] {
    if (!fs::exists(opt.checkpoint)) {
      throw IoError("checkpoint '" + opt.checkpoint.string() + "' does not exist");
    }
    auto const cfg_path = opt.config ? *opt.config : opt.checkpoint.parent_path() / "config.txt";
    auto raw = load_config(cfg_path, {});
    if (opt.data) {
      raw.set("data", *opt.data);
    }
    auto const cfg = resolve(raw, training_defaults());
    auto const ck = checkpoint_load(opt.checkpoint);
    auto const network = parse_eval_network(opt.network ? *opt.network : cfg.get_string("eval_network", "target"));
    auto const data = prepare_data(cfg);
    report_warnings(data.warnings, err);
    auto const &windows = pick_split(data, opt.split);
    Params const &params = network == EvalNetwork::Source ? ck.source : ck.mirror.target;
    if (params.input_dim() != windows.inputs.rows() || params.output_dim() != windows.targets.rows()) {
      throw ConfigError("checkpoint shapes do not match the configured window lengths");
    }
    std::ostringstream csv;
    write_metrics_header(csv);
    write_metrics_row(csv, opt.split, evaluate(params, windows));
    if (opt.out) {
      if (opt.out->has_parent_path()) {
        ensure_dir(opt.out->parent_path());
      }
      write_text(*opt.out, csv.str());
    }
    out << csv.str();
  });
}

int cmd_theorem(TheoremOptions const &opt, std::ostream &out, std::ostream &err)
{
  return guarded(err, [&] {
    auto const cfg = resolve(load_config(opt.instance_config, opt.overrides), theorem_defaults());
    auto const inst = oracle_instance_from(cfg);
    auto const report = run_estimator_experiment(inst);
    auto const json = report_json(report, inst);
    if (opt.out) {
      if (opt.out->has_parent_path()) {
        ensure_dir(opt.out->parent_path());
      }
      write_text(*opt.out, json);
      auto resolved = opt.out->parent_path() / (opt.out->stem().string() + ".config.txt");
      write_text(resolved, cfg.serialize());
    }
    out << report_table(report);
  });
}

} // namespace wavebound::app
