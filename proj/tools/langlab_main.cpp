#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "langlab/analysis/clustering.hpp"
#include "langlab/analysis/trajectory.hpp"
#include "langlab/cli/experiment.hpp"
#include "langlab/core/errors.hpp"
#include "langlab/core/text.hpp"
#include "langlab/corpora/wals.hpp"
#include "langlab/langspace/store.hpp"
#include "langlab/typology/eval.hpp"

namespace fs = std::filesystem;
using namespace langlab;

namespace {

struct WalsArgs {
  std::string languages;
  std::string features;
  std::string values;
};

void add_wals_options(CLI::App* cmd, WalsArgs& args) {
  cmd->add_option("--wals-languages", args.languages, "WALS languages TSV")->required();
  cmd->add_option("--wals-features", args.features, "WALS features TSV")->required();
  cmd->add_option("--wals-values", args.values, "WALS values TSV")->required();
}

struct SplitArgs {
  std::string split = "random";
  Index folds = 3;
  std::string family;
  std::uint64_t seed = 1;
  int k = 1;
  std::string metric = "euclidean";
};

void add_split_options(CLI::App* cmd, SplitArgs& args) {
  cmd->add_option("--split", args.split, "random | unseen_family | all_features");
  cmd->add_option("--folds", args.folds, "cross-validation folds (random split)");
  cmd->add_option("--unseen-family", args.family, "held-out family (family splits)");
  cmd->add_option("--seed", args.seed, "evaluation seed");
  cmd->add_option("--k", args.k, "nearest neighbours");
  cmd->add_option("--metric", args.metric, "euclidean | cosine");
}

typology::SplitSpec to_split_spec(const SplitArgs& args) {
  typology::SplitSpec spec;
  spec.mode = typology::parse_split_mode(args.split);
  spec.folds = args.folds;
  spec.held_out_family = args.family;
  spec.seed = args.seed;
  if (spec.mode != typology::SplitMode::Random && spec.held_out_family.empty())
    throw ConfigError("--unseen-family is required for split '" + args.split + "'");
  return spec;
}

void emit(const std::string& content, const std::string& path) {
  if (path.empty())
    std::cout << content;
  else
    write_file_atomic(path, content);
}

langspace::SnapshotSeries load_snapshot_dir(const std::string& dir) {
  std::vector<std::pair<Index, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string stem = entry.path().stem().string();
    if (!entry.is_regular_file() || stem.rfind("emb_", 0) != 0 ||
        entry.path().extension() != ".txt")
      continue;
    files.emplace_back(
        static_cast<Index>(parse_int(stem.substr(4), "snapshot file " + stem)), entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no emb_<iteration>.txt snapshots under " + dir);
  langspace::SnapshotSeries series;
  for (const auto& [iteration, path] : files)
    series.record(iteration, langspace::EmbeddingStore::load_pretrained(path.string()).frame());
  return series;
}

int run(int argc, char** argv) {
  CLI::App app{"langlab: learning and probing distributed language representations"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "run a full experiment from a config file");
  std::string config_path;
  train->add_option("config", config_path, "INI experiment config")->required();

  auto* evalcmd = app.add_subcommand("eval-wals", "predict WALS features from an embedding file");
  std::string eval_embeddings;
  std::string eval_category = "all";
  std::string eval_out;
  WalsArgs eval_wals;
  SplitArgs eval_split;
  evalcmd->add_option("--embeddings", eval_embeddings, "embedding file (d=<dim> header)")
      ->required();
  add_wals_options(evalcmd, eval_wals);
  evalcmd->add_option("--category", eval_category, "phonology | morphology | word_order | all");
  add_split_options(evalcmd, eval_split);
  evalcmd->add_option("--out", eval_out, "output TSV path (default: stdout)");

  auto* analyze = app.add_subcommand("analyze", "qualitative instruments");
  analyze->require_subcommand(1);

  auto* upgma_cmd = analyze->add_subcommand("upgma", "cluster language embeddings into a tree");
  std::string upgma_embeddings;
  std::string upgma_languages;
  std::string upgma_newick;
  std::string upgma_svg;
  upgma_cmd->add_option("--embeddings", upgma_embeddings, "embedding file")->required();
  upgma_cmd->add_option("--languages", upgma_languages,
                        "comma-separated subset (default: every language in the file)");
  upgma_cmd->add_option("--newick", upgma_newick, "Newick output path (default: stdout)");
  upgma_cmd->add_option("--svg", upgma_svg, "SVG output path");

  auto* traj_cmd =
      analyze->add_subcommand("trajectory", "feature accuracy across training snapshots");
  std::string traj_snapshots;
  std::string traj_feature;
  std::string traj_out;
  WalsArgs traj_wals;
  SplitArgs traj_split;
  traj_cmd->add_option("--snapshots", traj_snapshots, "run's snapshots/ directory")->required();
  traj_cmd->add_option("--feature", traj_feature, "WALS feature id")->required();
  add_wals_options(traj_cmd, traj_wals);
  add_split_options(traj_cmd, traj_split);
  traj_cmd->add_option("--out", traj_out, "output TSV path (default: stdout)");

  auto* compare = app.add_subcommand("compare", "three-row comparison of two completed runs");
  std::string dir_a;
  std::string dir_b;
  compare->add_option("run_a", dir_a, "first run directory")->required();
  compare->add_option("run_b", dir_b, "second run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  if (*train) {
    const auto cfg = cli::parse_experiment_config(config_path);
    cli::run_experiment(cfg);
    std::cout << "run complete: " << cfg.out_dir << "\n";
  } else if (*evalcmd) {
    const auto wals =
        corpora::parse_wals(eval_wals.languages, eval_wals.features, eval_wals.values);
    const auto frame = langspace::EmbeddingStore::load_pretrained(eval_embeddings).frame();
    const auto ids = cli::category_feature_ids(wals, eval_category);
    const auto result = typology::evaluate(frame, wals, ids, to_split_spec(eval_split),
                                           eval_split.k, typology::parse_metric(eval_split.metric));
    emit(typology::to_tsv(result), eval_out);
    if (!eval_out.empty())
      std::cout << "mean accuracy " << result.mean_accuracy() << " over "
                << result.features.size() << " features (baseline " << result.mean_baseline()
                << ") -> " << eval_out << "\n";
  } else if (*upgma_cmd) {
    const auto frame = langspace::EmbeddingStore::load_pretrained(upgma_embeddings).frame();
    const std::vector<std::string> languages =
        upgma_languages.empty() ? frame.codes : split(upgma_languages, ',');
    const auto tree = analysis::upgma(analysis::embedding_distance_matrix(frame, languages));
    emit(analysis::to_newick(tree) + "\n", upgma_newick);
    if (!upgma_svg.empty()) write_file_atomic(upgma_svg, analysis::render_dendrogram_svg(tree));
  } else if (*traj_cmd) {
    const auto wals =
        corpora::parse_wals(traj_wals.languages, traj_wals.features, traj_wals.values);
    const auto series = load_snapshot_dir(traj_snapshots);
    const auto traj =
        analysis::accuracy_trajectory(series, wals, traj_feature, to_split_spec(traj_split),
                                      traj_split.k, typology::parse_metric(traj_split.metric));
    emit(analysis::to_tsv(traj), traj_out);
  } else if (*compare) {
    std::cout << cli::compare_runs(dir_a, dir_b);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::out_of_range& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
