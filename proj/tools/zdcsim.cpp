#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <sstream>

#include "zdc/errors.hpp"
#include "zdc/pipeline/binary_io.hpp"
#include "zdc/pipeline/dataset_io.hpp"
#include "zdc/pipeline/recipe.hpp"
#include "zdc/pipeline/simulation.hpp"
#include "zdc/pipeline/weights.hpp"

using namespace zdc;
using namespace zdc::pipeline;

namespace {

void log_line(const std::string& msg) { std::cerr << msg << "\n"; }

training::EpochCallback epoch_logger(const std::string& model) {
  return [model](const training::EpochRecord& r) {
    std::ostringstream os;
    os << model << " epoch " << r.epoch << " (" << r.seconds << " s)";
    for (const auto& [name, v] : r.losses) os << " " << name << "=" << v;
    log_line(os.str());
  };
}

struct TrainArgs {
  std::string data, out, aux_regressor;
  int epochs = 10;
  std::size_t batch = 64;
  float lr = 0.0f;
  std::uint64_t seed = 42;
  double lambda_aux = 1.0;
  double beta_kl = 1.0;
  std::size_t max_samples = 0;

  training::TrainConfig config() const {
    training::TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch;
    c.learning_rate = lr;
    c.seed = seed;
    c.lambda_aux = lambda_aux;
    c.beta_kl = beta_kl;
    c.validate();
    return c;
  }
};

CLI::App* add_train(CLI::App& app, const std::string& name, const std::string& what, TrainArgs& a) {
  auto* cmd = app.add_subcommand(name, what);
  cmd->add_option("--data", a.data, "Dataset directory")->required();
  cmd->add_option("--out", a.out, "Output weights manifest")->required();
  cmd->add_option("--epochs", a.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch", a.batch, "Mini-batch size")->capture_default_str();
  cmd->add_option("--lr", a.lr, "Learning rate (0 = network default)")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Seed")->capture_default_str();
  return cmd;
}

/// Non-zero training samples of the dataset, capped at `max_samples`.
SampleSet generative_subset(const SampleSet& data, std::size_t max_samples) {
  auto idx = data.indices(Split::train, true);
  if (max_samples > 0 && idx.size() > max_samples) idx.resize(max_samples);
  if (idx.empty()) throw ValidationError("the dataset holds no non-zero training responses");
  return data.subset(idx);
}

void save_trained(ModelBundle& b, const DatasetFiles& ds, const training::TrainConfig& cfg,
                  const training::TrainLog& log, const std::string& out) {
  b.stats = ds.manifest.stats;
  b.dataset_id = ds.manifest.id;
  b.train_config = cfg;
  b.training_log = to_json(log);
  save_model(out, b);
  write_timing(out, timing_json(log));
  std::cout << "wrote " << out << " (" << model_id(b) << ")\n";
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("cannot parse '" + item + "' as a number");
    }
  }
  return out;
}

/// Inclusive grid min, min+step, ..., max computed on a 1e-6 lattice so that
/// decimal grids come out exactly as (integer)/10^k.
std::vector<double> decimal_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw ValidationError("multiplier grid needs min <= max and a positive step");
  const auto a = std::llround(lo * 1e6), b = std::llround(hi * 1e6), s = std::llround(step * 1e6);
  if (s <= 0) throw ValidationError("multiplier step is too small");
  std::vector<double> out;
  for (long long v = a; v <= b; v += s) out.push_back(static_cast<double>(v) / 1e6);
  return out;
}

json error_json(const char* type, const std::string& message) {
  return {{"error", type}, {"message", message}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast calorimeter response simulation: data generation, training, calibration and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ZDC_VERSION));

  std::size_t gen_n = 1000;
  std::uint64_t gen_seed = 42;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--n", gen_n, "Number of samples")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  TrainArgs clf_args, reg_args, vae_args, gan_args;
  add_train(app, "train-classifier", "Train the zero/non-zero classifier", clf_args);
  auto* reg = add_train(app, "train-regressor", "Pretrain the brightest-pixel regressor", reg_args);
  reg->add_option("--max-samples", reg_args.max_samples, "Cap on non-zero training samples (0 = all)");
  auto* vae = add_train(app, "train-vae", "Train the conditional VAE", vae_args);
  vae->add_option("--beta-kl", vae_args.beta_kl, "KL weight")->capture_default_str();
  vae->add_option("--max-samples", vae_args.max_samples, "Cap on non-zero training samples (0 = all)");
  auto* gan = add_train(app, "train-gan", "Train the conditional GAN", gan_args);
  gan->add_option("--aux-regressor", gan_args.aux_regressor, "Frozen regressor weights for the auxiliary loss");
  gan->add_option("--lambda-aux", gan_args.lambda_aux, "Auxiliary loss weight")->capture_default_str();
  gan->add_option("--max-samples", gan_args.max_samples, "Cap on non-zero training samples (0 = all)");

  std::string cal_model, cal_data, cal_out, cal_sigmas = "1.0,1.5,2.0,2.5,3.0,3.5,4.0";
  double c_min = 0.90, c_max = 1.10, c_step = 0.01;
  std::uint64_t cal_seed = 42;
  std::size_t cal_samples = 0;
  auto* cal = app.add_subcommand("calibrate", "Grid-search sigma and the output multiplier c");
  cal->add_option("--model", cal_model, "Generative model weights")->required();
  cal->add_option("--data", cal_data, "Dataset directory")->required();
  cal->add_option("--c-min", c_min)->capture_default_str();
  cal->add_option("--c-max", c_max)->capture_default_str();
  cal->add_option("--c-step", c_step)->capture_default_str();
  cal->add_option("--sigmas", cal_sigmas, "Comma-separated sigma grid")->capture_default_str();
  cal->add_option("--seed", cal_seed)->capture_default_str();
  cal->add_option("--samples", cal_samples, "Cap on non-zero training samples scored (0 = all)");
  cal->add_option("--out", cal_out, "Write the calibrated model here instead of updating --model");

  std::string ev_model, ev_classifier, ev_data, ev_split = "validation", ev_report, ev_hist, ev_generated;
  EvaluateOptions ev_opts;
  bool ev_no_post = false;
  auto* ev = app.add_subcommand("evaluate", "Channel Wasserstein and classification report");
  ev->add_option("--model", ev_model, "Generative model weights");
  ev->add_option("--classifier", ev_classifier, "Classifier weights");
  ev->add_option("--generated", ev_generated, "Responses file (n x 1936 f32) aligned with the dataset rows");
  ev->add_option("--data", ev_data, "Dataset directory")->required();
  ev->add_option("--split", ev_split)->capture_default_str();
  ev->add_option("--report", ev_report, "Report JSON path")->required();
  ev->add_option("--hist-dir", ev_hist, "Directory for channel histogram CSVs");
  ev->add_option("--bins", ev_opts.bins)->capture_default_str();
  ev->add_option("--seed", ev_opts.seed)->capture_default_str();
  ev->add_option("--max-samples", ev_opts.max_samples, "Cap on non-zero samples compared (0 = all)");
  ev->add_option("--threshold", ev_opts.threshold)->capture_default_str();
  ev->add_flag("--no-postproc", ev_no_post, "Use c = 1 and sigma = 1 instead of the calibrated values");

  std::string sim_model, sim_classifier, sim_particles, sim_out;
  SimulateOptions sim_opts;
  double sim_c = 0.0, sim_sigma = -1.0;
  auto* sim = app.add_subcommand("simulate", "Gated fast simulation of a particle table");
  sim->add_option("--model", sim_model)->required();
  sim->add_option("--classifier", sim_classifier)->required();
  sim->add_option("--particles", sim_particles, "n x 9 f32 particle table")->required();
  sim->add_option("--out", sim_out, "n x 1936 f32 response table")->required();
  sim->add_option("--seed", sim_opts.seed)->capture_default_str();
  sim->add_option("--threshold", sim_opts.threshold)->capture_default_str();
  sim->add_option("--c", sim_c, "Override the calibrated multiplier");
  sim->add_option("--sigma", sim_sigma, "Override the calibrated noise sigma");

  std::string bench_model, bench_classifier, bench_report;
  std::size_t bench_n = 1000;
  std::uint64_t bench_seed = 42;
  auto* bench = app.add_subcommand("benchmark", "Throughput of the gated simulation");
  bench->add_option("--model", bench_model)->required();
  bench->add_option("--classifier", bench_classifier)->required();
  bench->add_option("--n", bench_n)->capture_default_str();
  bench->add_option("--seed", bench_seed)->capture_default_str();
  bench->add_option("--report", bench_report, "Report JSON path");

  RecipeConfig rc;
  std::string rc_out;
  auto* recipe = app.add_subcommand("recipe", "End-to-end desk-scale run producing the model comparison table");
  recipe->add_option("--out", rc_out, "Output directory")->required();
  recipe->add_option("--n", rc.n)->capture_default_str();
  recipe->add_option("--gen-samples", rc.gen_samples)->capture_default_str();
  recipe->add_option("--calib-samples", rc.calib_samples)->capture_default_str();
  recipe->add_option("--eval-samples", rc.eval_samples)->capture_default_str();
  recipe->add_option("--epochs", rc.epochs)->capture_default_str();
  recipe->add_option("--classifier-epochs", rc.classifier_epochs)->capture_default_str();
  recipe->add_option("--batch", rc.batch_size)->capture_default_str();
  recipe->add_option("--lambda-aux", rc.lambda_aux)->capture_default_str();
  recipe->add_option("--seed", rc.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json("usage", e.what()).dump() << "\n";
    return 2;
  }

  try {
    if (*gen) {
      OracleConfig oc;
      oc.seed = gen_seed;
      oc.n_samples = gen_n;
      const auto ds = make_oracle_dataset(oc);
      write_dataset(gen_out, ds.data, ds.manifest);
      std::cout << "wrote " << gen_n << " samples to " << gen_out << " (zero fraction " << ds.data.zero_fraction()
                << ")\n";
    } else if (app.got_subcommand("train-classifier")) {
      const auto ds = read_dataset(clf_args.data);
      const auto cfg = clf_args.config();
      auto r = training::train_classifier(ds.data, ds.manifest.stats, cfg, epoch_logger("classifier"));
      ModelBundle b = ModelBundle::create(ModelKind::classifier);
      b.classifier = std::make_unique<models::ClassifierNet>(std::move(r.net));
      save_trained(b, ds, cfg, r.log, clf_args.out);
      std::cout << "validation accuracy " << r.validation.accuracy << "\n";
    } else if (app.got_subcommand("train-regressor")) {
      const auto ds = read_dataset(reg_args.data);
      const auto cfg = reg_args.config();
      const auto subset = generative_subset(ds.data, reg_args.max_samples);
      auto r = training::pretrain_regressor(subset, ds.manifest.stats, cfg, epoch_logger("regressor"));
      const auto val = ds.data.indices(Split::validation, true);
      ModelBundle b = ModelBundle::create(ModelKind::regressor);
      b.regressor = std::make_unique<models::RegressorNet>(std::move(r.net));
      save_trained(b, ds, cfg, r.log, reg_args.out);
      if (!val.empty())
        std::cout << "validation MAE " << training::regressor_mae(*b.regressor, ds.data, val, ds.manifest.stats)
                  << " px\n";
    } else if (app.got_subcommand("train-vae")) {
      const auto ds = read_dataset(vae_args.data);
      const auto cfg = vae_args.config();
      const auto subset = generative_subset(ds.data, vae_args.max_samples);
      auto r = training::train_vae(subset, ds.manifest.stats, cfg, epoch_logger("vae"));
      ModelBundle b = ModelBundle::create(ModelKind::vae);
      b.encoder = std::make_unique<models::EncoderNet>(std::move(r.encoder));
      b.decoder = std::make_unique<models::DecoderNet>(std::move(r.decoder));
      save_trained(b, ds, cfg, r.log, vae_args.out);
    } else if (app.got_subcommand("train-gan")) {
      const auto ds = read_dataset(gan_args.data);
      const auto cfg = gan_args.config();
      const auto subset = generative_subset(ds.data, gan_args.max_samples);
      std::optional<ModelBundle> reg_bundle;
      if (!gan_args.aux_regressor.empty()) {
        reg_bundle = load_model(gan_args.aux_regressor);
        if (reg_bundle->kind != ModelKind::regressor)
          throw ValidationError(gan_args.aux_regressor + " is not a regressor model");
        reg_bundle->regressor->params().set_trainable(false);
      }
      const models::RegressorNet* regressor = reg_bundle ? reg_bundle->regressor.get() : nullptr;
      const auto kind = regressor != nullptr ? ModelKind::gan_aux : ModelKind::gan;
      auto r = training::train_gan(subset, ds.manifest.stats, cfg, regressor, epoch_logger(to_string(kind)));
      ModelBundle b = ModelBundle::create(kind);
      b.generator = std::make_unique<models::GeneratorNet>(std::move(r.generator));
      b.discriminator = std::make_unique<models::DiscriminatorNet>(std::move(r.discriminator));
      save_trained(b, ds, cfg, r.log, gan_args.out);
    } else if (*cal) {
      auto b = load_model(cal_model);
      if (!b.generative()) throw ValidationError(cal_model + " is not a generative model");
      const auto ds = read_dataset(cal_data);
      const auto idx = evaluation_indices(ds.data, Split::train, cal_samples);
      if (idx.empty()) throw ValidationError("the dataset holds no non-zero training responses");
      const auto sigmas = parse_list(cal_sigmas);
      const auto cs = decimal_grid(c_min, c_max, c_step);
      b.calibration = calibration::calibrate(*b.sampler(), ds.data, idx, sigmas, cs, {.seed = cal_seed});
      const std::string out = cal_out.empty() ? cal_model : cal_out;
      save_model(out, b);
      std::cout << "sigma* " << b.calibration->sigma_star << ", c* " << b.calibration->c_star << " -> " << out
                << "\n";
    } else if (*ev) {
      const auto ds = read_dataset(ev_data);
      std::optional<ModelBundle> model, classifier;
      std::optional<std::vector<float>> generated;
      if (!ev_model.empty()) model = load_model(ev_model);
      if (!ev_classifier.empty()) {
        classifier = load_model(ev_classifier);
        if (classifier->kind != ModelKind::classifier) throw ValidationError(ev_classifier + " is not a classifier");
      }
      if (!ev_generated.empty()) generated = read_responses(ev_generated, ds.data.size());
      if (!model && !generated && !classifier)
        throw ValidationError("evaluate needs --model, --generated or --classifier");
      ev_opts.split = split_from_string(ev_split);
      ev_opts.postprocess = !ev_no_post;
      ev_opts.hist_dir = ev_hist;
      const auto result = evaluate(ds, generated ? nullptr : (model ? &*model : nullptr),
                                   classifier ? &*classifier : nullptr, generated ? &*generated : nullptr, ev_opts);
      write_text(ev_report, dump(result.report));
      write_timing(ev_report, {{"wall_seconds", result.seconds},
                               {"samples_per_sec", static_cast<double>(result.generated) /
                                                       std::max(result.seconds, 1e-9)}});
      if (result.report.contains("wasserstein"))
        std::cout << "mean W1 " << result.report["wasserstein"]["mean_w1"].get<double>() << "\n";
      std::cout << "wrote " << ev_report << "\n";
    } else if (*sim) {
      const auto model = load_model(sim_model);
      const auto classifier = load_model(sim_classifier);
      if (classifier.kind != ModelKind::classifier) throw ValidationError(sim_classifier + " is not a classifier");
      if (!model.generative()) throw ValidationError(sim_model + " is not a generative model");
      if (sim->count("--c") > 0) sim_opts.multiplier = sim_c;
      if (sim->count("--sigma") > 0) sim_opts.sigma = sim_sigma;
      const auto particles = read_particles(sim_particles);
      const auto out = simulate(particles, classifier, model, sim_opts);
      write_f32(sim_out, out.responses);
      std::cout << "simulated " << particles.size() << " particles, " << out.zero_count << " gated to zero\n";
    } else if (*bench) {
      const auto model = load_model(bench_model);
      const auto classifier = load_model(bench_classifier);
      if (classifier.kind != ModelKind::classifier) throw ValidationError(bench_classifier + " is not a classifier");
      if (!model.generative()) throw ValidationError(bench_model + " is not a generative model");
      const auto r = benchmark(model, classifier, bench_n, bench_seed);
      if (!bench_report.empty()) {
        write_text(bench_report, dump(r.report));
        write_timing(bench_report, r.timing);
      }
      std::cout << "samples/sec " << r.timing["samples_per_sec"].get<double>() << " (" << bench_n << " particles, "
                << r.report["zero_outputs"].get<std::size_t>() << " zero)\n";
    } else if (*recipe) {
      const auto r = run_recipe(rc_out, rc, log_line);
      std::cout << recipe_markdown(r.report);
      std::cout << "total " << r.timing["total_seconds"].get<double>() << " s\n";
    }
  } catch (const ValidationError& e) {
    std::cerr << error_json("validation", e.what()).dump() << "\n";
    return 1;
  } catch (const ContractError& e) {
    std::cerr << error_json("contract", e.what()).dump() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << error_json("numeric", e.what()).dump() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << error_json("io", e.what()).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << error_json("internal", e.what()).dump() << "\n";
    return 1;
  }
  return 0;
}
