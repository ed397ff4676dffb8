// Copyright 2026 The Prefchat Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prefchat/cli.h"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "prefchat/annotation/http_server.h"
#include "prefchat/annotation/service.h"
#include "prefchat/checkpoint.h"
#include "prefchat/config.h"
#include "prefchat/corpus_stats.h"
#include "prefchat/errors.h"
#include "prefchat/evaluation.h"
#include "prefchat/generation.h"
#include "prefchat/quadruples.h"
#include "prefchat/rng.h"
#include "prefchat/rubric.h"
#include "prefchat/synthetic_corpus.h"
#include "prefchat/trainer.h"

namespace prefchat {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Globals {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string log_level = "info";

  AppConfig Load() const {
    std::optional<fs::path> file;
    if (!config_file.empty()) file = config_file;
    return LoadAppConfig(file, overrides);
  }
};

std::ofstream OpenOutput(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  return out;
}

std::vector<DialogueRecord> LoadSplit(const std::string& path,
                                      const std::string& split) {
  std::vector<DialogueRecord> records = LoadDataset(path);
  if (split == "all") return records;
  return FilterBySplit(records, ParseSplit(split));
}

Vocabulary VocabularyFor(std::span<const DialogueRecord> records) {
  std::vector<std::string> texts;
  for (const auto& r : records) {
    for (const auto& t : r.turns) {
      texts.push_back(t.final_text);
      for (const auto& c : t.shown_candidates) texts.push_back(c);
    }
  }
  return Vocabulary::FromTexts(texts);
}

Model LoadOrInitModel(const std::string& checkpoint, bool random_init,
                      const AppConfig& config,
                      std::span<const DialogueRecord> records) {
  if (!checkpoint.empty()) return LoadCheckpoint<float>(checkpoint);
  if (!random_init) throw ValidationError("--checkpoint is required (or --random-init)");
  Vocabulary vocab = VocabularyFor(records);
  ModelConfig mc = config.model;
  mc.vocab_size = vocab.size();
  return Model(mc, vocab);
}

std::vector<double> ParseFractions(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, ',');) {
    try {
      out.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw ValidationError("bad fraction '" + part + "'");
    }
  }
  if (out.size() != 3) throw ValidationError("--fractions needs three values");
  return out;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::istream& in,
           std::ostream& out, std::ostream& err) {
  CLI::App app{"Dialogue generation with learned preference estimation"};
  app.name("prefchat");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_file, "JSON config file");
  app.add_option("--set", g.overrides, "Override a config key: dotted.key=value");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off");
  std::function<void()> action;

  {
    auto* cmd = app.add_subcommand("train", "Joint generation/preference training");
    struct Opts {
      std::string train, valid, output, resume, log;
      std::optional<uint64_t> seed;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--train", o->train, "Training dataset (JSON lines)")->required();
    cmd->add_option("--valid", o->valid, "Validation dataset");
    cmd->add_option("--out", o->output, "Final checkpoint path")->required();
    cmd->add_option("--resume", o->resume, "Continue from a per-epoch checkpoint");
    cmd->add_option("--log", o->log, "Write the JSONL event stream here");
    cmd->add_option("--seed", o->seed, "Overrides train.seed and model.seed");
    cmd->callback([&, o] {
      action = [&, o] {
        AppConfig cfg = g.Load();
        if (o->seed) {
          cfg.train.seed = *o->seed;
          cfg.model.seed = *o->seed;
        }
        const auto train_records = LoadDataset(o->train);
        const auto valid_records =
            o->valid.empty() ? std::vector<DialogueRecord>{} : LoadDataset(o->valid);
        std::ofstream log_file;
        if (!o->log.empty()) log_file = OpenOutput(o->log);
        TrainEventSink sink = [&](const json& e) {
          if (log_file.is_open()) log_file << e.dump() << '\n' << std::flush;
        };
        if (!cfg.train.checkpoint_dir.empty()) {
          fs::create_directories(cfg.train.checkpoint_dir);
        }
        TrainReport report;
        Model final_model = [&]() -> Model {
          if (!o->resume.empty()) {
            Trainer trainer = Trainer::Resume(o->resume, cfg.train);
            report = trainer.Run(train_records, valid_records, sink);
            return trainer.model();
          }
          std::vector<DialogueRecord> all = train_records;
          all.insert(all.end(), valid_records.begin(), valid_records.end());
          Vocabulary vocab = VocabularyFor(all);
          ModelConfig mc = cfg.model;
          mc.vocab_size = vocab.size();
          TrainResult r = Train(Model(mc, vocab), train_records, cfg.train,
                                valid_records, sink);
          report = std::move(r.report);
          return std::move(r.model);
        }();
        SaveCheckpoint(o->output, final_model);
        json summary = {{"checkpoint", o->output},
                        {"steps", report.steps.size()},
                        {"epochs", json::array()}};
        for (const auto& e : report.epochs) summary["epochs"].push_back(ToJson(e));
        out << summary.dump(2) << '\n';
      };
    });
  }

  {
    auto* cmd = app.add_subcommand("serve", "Run the annotation HTTP service");
    auto checkpoint = std::make_shared<std::string>();
    auto seed = std::make_shared<uint64_t>(0);
    cmd->add_option("--checkpoint", *checkpoint, "Model checkpoint (else service.checkpoint)");
    cmd->add_option("--seed", *seed, "Root seed for candidate generation");
    cmd->callback([&, checkpoint, seed] {
      action = [&, checkpoint, seed] {
        AppConfig cfg = g.Load();
        const std::string path = checkpoint->empty() ? cfg.service.checkpoint : *checkpoint;
        if (path.empty()) throw ValidationError("a model checkpoint is required");
        auto backend = std::make_shared<annotation::ModelBackend>(
            LoadCheckpoint<float>(path), cfg.decode);
        annotation::AnnotationService service(
            {cfg.service.data_dir, static_cast<size_t>(cfg.service.queue_capacity), *seed},
            backend);
        annotation::HttpServer server(service, cfg.service.auth_token);
        server.Run(cfg.service.bind_address, cfg.service.port);
      };
    });
  }

  {
    auto* cmd = app.add_subcommand("chat", "Talk to a model on the terminal");
    auto checkpoint = std::make_shared<std::string>();
    auto seed = std::make_shared<uint64_t>(0);
    cmd->add_option("--checkpoint", *checkpoint, "Model checkpoint")->required();
    cmd->add_option("--seed", *seed, "Sampling seed");
    cmd->callback([&, checkpoint, seed] {
      action = [&, checkpoint, seed] {
        AppConfig cfg = g.Load();
        Model model = LoadCheckpoint<float>(*checkpoint);
        DialogueContext ctx;
        std::string line;
        for (uint64_t turn = 0; std::getline(in, line);) {
          if (line.empty()) continue;
          ctx.utterances.push_back({ctx.empty() ? Role::kA : ctx.NextRole(), line});
          DecodeConfig dc = cfg.decode;
          dc.rng_seed = MixSeed({*seed, turn++});
          const std::string reply = Respond(model, ctx, dc).best().text;
          ctx.utterances.push_back({ctx.NextRole(), reply});
          out << reply << '\n' << std::flush;
        }
      };
    });
  }

  {
    auto* cmd = app.add_subcommand("self-chat", "Let the model talk to itself from openings");
    struct Opts {
      std::string checkpoint, openings, output;
      int rounds = 5;
      uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--checkpoint", o->checkpoint, "Model checkpoint")->required();
    cmd->add_option("--openings", o->openings, "One opening utterance per line")->required();
    cmd->add_option("--rounds", o->rounds, "Exchanges after each opening");
    cmd->add_option("--out", o->output, "Transcripts (JSON lines); default stdout");
    cmd->add_option("--seed", o->seed, "Sampling seed");
    cmd->callback([&, o] {
      action = [&, o] {
        AppConfig cfg = g.Load();
        Model model = LoadCheckpoint<float>(o->checkpoint);
        std::ifstream openings(o->openings);
        if (!openings) throw ValidationError("cannot open " + o->openings);
        std::vector<DialogueRecord> records;
        std::string line;
        for (uint64_t i = 0; std::getline(openings, line);) {
          if (line.empty()) continue;
          DecodeConfig dc = cfg.decode;
          dc.rng_seed = MixSeed({o->seed, i});
          records.push_back(SelfChat(model, line, o->rounds, dc,
                                     "self-chat-" + std::to_string(i)));
          ++i;
        }
        if (o->output.empty()) {
          WriteDataset(out, records);
        } else {
          SaveDataset(o->output, records);
        }
      };
    });
  }

  {
    auto* cmd = app.add_subcommand("eval-rank", "MAP/MRR/P@1 of response ranking");
    struct Opts {
      std::string checkpoint, data, split = "test", output;
      std::vector<std::string> scorers;
      bool random_init = false;
      bool json_only = false;
      uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--checkpoint", o->checkpoint, "Model checkpoint");
    cmd->add_flag("--random-init", o->random_init, "Use a freshly initialized model");
    cmd->add_option("--data", o->data, "Dataset (JSON lines)")->required();
    cmd->add_option("--split", o->split, "train, valid, test, unassigned or all");
    cmd->add_option("--scorer", o->scorers,
                    "preference_score, generation_logprob or generation_logprob_mean");
    cmd->add_option("--out", o->output, "Write the JSON report here");
    cmd->add_flag("--json", o->json_only, "Print JSON instead of a table");
    cmd->add_option("--seed", o->seed, "Seed for the position of the human response");
    cmd->callback([&, o] {
      action = [&, o] {
        AppConfig cfg = g.Load();
        if (o->random_init) cfg.model.seed = o->seed;
        const auto records = LoadSplit(o->data, o->split);
        Model model = LoadOrInitModel(o->checkpoint, o->random_init, cfg, records);
        const auto instances = BuildRankingInstances(records, o->seed);
        if (instances.empty()) throw ValidationError("no ranking instances in the data");
        std::vector<std::string> names = o->scorers;
        if (names.empty()) names = {"preference_score", "generation_logprob"};
        std::vector<RankingReport> reports;
        for (const auto& n : names) {
          reports.push_back(EvaluateRanking(model, instances, ParseScorer(n)));
        }
        json j = json::array();
        for (const auto& r : reports) j.push_back(ToJson(r));
        if (!o->output.empty()) OpenOutput(o->output) << j.dump(2) << '\n';
        if (o->json_only) {
          out << j.dump() << '\n';
        } else {
          out << FormatRankingTable(reports);
        }
      };
    });
  }

  {
    auto* cmd = app.add_subcommand("eval-static", "Responses to sampled test contexts for rating");
    struct Opts {
      std::string checkpoint, data, split = "test", output;
      size_t n = 100;
      uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--checkpoint", o->checkpoint, "Model checkpoint")->required();
    cmd->add_option("--data", o->data, "Dataset (JSON lines)")->required();
    cmd->add_option("--split", o->split, "train, valid, test, unassigned or all");
    cmd->add_option("--n", o->n, "Number of contexts");
    cmd->add_option("--out", o->output, "Output rows (JSON lines); default stdout");
    cmd->add_option("--seed", o->seed, "Sampling seed");
    cmd->callback([&, o] {
      action = [&, o] {
        AppConfig cfg = g.Load();
        const auto records = LoadSplit(o->data, o->split);
        Model model = LoadCheckpoint<float>(o->checkpoint);
        const auto rows = StaticEval(model, records, o->n, o->seed, cfg.decode);
        if (o->output.empty()) {
          WriteStaticEval(out, rows);
        } else {
          auto f = OpenOutput(o->output);
          WriteStaticEval(f, rows);
        }
      };
    });
  }

  {
    auto* cmd = app.add_subcommand("eval-ratings", "Aggregate rubric ratings and agreement");
    auto path = std::make_shared<std::string>();
    auto as_json = std::make_shared<bool>(false);
    cmd->add_option("--ratings", *path, "Ratings (JSON lines)")->required();
    cmd->add_flag("--json", *as_json, "Print JSON instead of a table");
    cmd->callback([&, path, as_json] {
      action = [&, path, as_json] {
        const auto ratings = LoadRatings(*path);
        const RubricReport report = AggregateRubric(ratings);
        if (*as_json) {
          out << ToJson(report).dump() << '\n';
        } else {
          out << FormatRubricTable(report);
        }
      };
    });
  }

  {
    auto* cmd = app.add_subcommand("stats", "Corpus statistics");
    auto path = std::make_shared<std::string>();
    auto include_rejected = std::make_shared<bool>(false);
    auto as_json = std::make_shared<bool>(false);
    cmd->add_option("--data", *path, "Dataset (JSON lines)")->required();
    cmd->add_flag("--include-rejected", *include_rejected, "Count rejected records too");
    cmd->add_flag("--json", *as_json, "Print JSON instead of a table");
    cmd->callback([&, path, include_rejected, as_json] {
      action = [&, path, include_rejected, as_json] {
        const auto records = LoadDataset(*path);
        const CorpusStats s = ComputeStats(records, {*include_rejected});
        if (*as_json) {
          out << ToJson(s).dump() << '\n';
        } else {
          out << FormatStatsTable(s);
        }
      };
    });
  }

  {
    auto* cmd = app.add_subcommand("export-quadruples", "Training quadruples of one epoch");
    auto path = std::make_shared<std::string>();
    auto output = std::make_shared<std::string>();
    auto seed = std::make_shared<uint64_t>(0);
    cmd->add_option("--data", *path, "Dataset (JSON lines)")->required();
    cmd->add_option("--out", *output, "Output (JSON lines); default stdout");
    cmd->add_option("--seed", *seed, "Epoch seed");
    cmd->callback([&, path, output, seed] {
      action = [&, path, output, seed] {
        const auto records = LoadDataset(*path);
        const auto quads = BuildQuadruples(records, *seed);
        std::ofstream file;
        if (!output->empty()) file = OpenOutput(*output);
        std::ostream& dst = output->empty() ? out : file;
        for (const auto& q : quads) dst << QuadrupleToJson(q).dump() << '\n';
      };
    });
  }

  {
    auto* cmd = app.add_subcommand("gradcheck", "Finite-difference check of the joint-loss gradient");
    struct Opts {
      int models = 20;
      size_t samples = 200;
      double epsilon = 1e-4;
      double perturbation = 0.1;
      double tolerance = 1e-4;
      uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--models", o->models, "Number of random model/quadruple pairs");
    cmd->add_option("--samples", o->samples, "Parameters checked per model");
    cmd->add_option("--epsilon", o->epsilon, "Central-difference step");
    cmd->add_option("--perturbation", o->perturbation, "Noise added to the initial parameters");
    cmd->add_option("--tolerance", o->tolerance, "Largest acceptable relative error");
    cmd->add_option("--seed", o->seed, "Seed of the first case");
    cmd->callback([&, o] {
      action = [&, o] {
        double worst = 0;
        for (int i = 0; i < o->models; ++i) {
          GradientCheckCase c =
              RandomGradientCheckCase(MixSeed({o->seed, static_cast<uint64_t>(i)}),
                                      o->perturbation);
          GradientCheckOptions opts;
          opts.samples = o->samples;
          opts.seed = static_cast<uint64_t>(i);
          const auto r = GradientCheck(c.model, c.quadruple, o->epsilon, opts);
          worst = std::max(worst, r.max_relative_error);
          out << json{{"case", i},
                      {"parameters", c.model.parameter_count()},
                      {"checked", r.checked},
                      {"max_relative_error", r.max_relative_error},
                      {"worst_index", r.worst_index}}
                     .dump()
              << '\n';
        }
        out << json{{"max_relative_error", worst}, {"tolerance", o->tolerance},
                    {"pass", worst < o->tolerance}}
                   .dump()
            << '\n';
        if (!(worst < o->tolerance)) throw NumericError("gradient check failed");
      };
    });
  }

  {
    auto* cmd = app.add_subcommand("split", "Assign train/valid/test splits per dialogue");
    struct Opts {
      std::string data, output, fractions = "0.8,0.1,0.1";
      uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--data", o->data, "Dataset (JSON lines)")->required();
    cmd->add_option("--out", o->output, "Output dataset")->required();
    cmd->add_option("--fractions", o->fractions, "train,valid,test");
    cmd->add_option("--seed", o->seed, "Shuffle seed");
    cmd->callback([&, o] {
      action = [&, o] {
        const auto f = ParseFractions(o->fractions);
        auto records = SplitDataset(LoadDataset(o->data), {f[0], f[1], f[2]}, o->seed);
        SaveDataset(o->output, records);
        size_t counts[3] = {0, 0, 0};
        for (const auto& r : records) {
          if (r.split == Split::kTrain) ++counts[0];
          if (r.split == Split::kValid) ++counts[1];
          if (r.split == Split::kTest) ++counts[2];
        }
        out << json{{"train", counts[0]}, {"valid", counts[1]}, {"test", counts[2]}}.dump()
            << '\n';
      };
    });
  }

  {
    auto* cmd = app.add_subcommand("synth", "Write a synthetic collection corpus");
    auto o = std::make_shared<SyntheticCorpusConfig>();
    auto output = std::make_shared<std::string>();
    cmd->add_option("--out", *output, "Output dataset")->required();
    cmd->add_option("--dialogues", o->n_dialogues, "Number of dialogues");
    cmd->add_option("--min-rounds", o->min_rounds, "Fewest annotated turns per dialogue");
    cmd->add_option("--max-rounds", o->max_rounds, "Most annotated turns per dialogue");
    cmd->add_option("--registers", o->n_registers, "Number of topic registers");
    cmd->add_option("--candidate-on-topic", o->candidate_on_topic,
                    "Chance that a candidate word stays on the dialogue register");
    cmd->add_option("--seed", o->seed, "Generator seed");
    cmd->callback([&, o, output] {
      action = [&, o, output] {
        SaveDataset(*output, GenerateSyntheticCorpus(*o));
      };
    });
  }

  std::vector<std::string> argv_storage{"prefchat"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    spdlog::set_level(spdlog::level::from_str(g.log_level));
    g.Load();
    if (action) action();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const annotation::ApiError& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == annotation::ApiError::Code::kValidation ? kExitValidation
                                                              : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace prefchat
