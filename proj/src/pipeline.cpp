/*
Copyright 2026 The qpnet Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "qpnet/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "qpnet/adaptation.h"
#include "qpnet/converter.h"
#include "qpnet/metrics.h"
#include "qpnet/training.h"
#include "qpnet/vocoder.h"

namespace fs = std::filesystem;

namespace qpnet {

namespace {

// ---------------------------------------------------------------------------
// Run-directory plumbing

fs::path run_dir(const Config& cfg) { return fs::path(cfg.str("run.dir")); }

fs::path ensure_dir(const fs::path& p) {
  fs::create_directories(p);
  return p;
}

void require_exists(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw MissingInputError(what + " not found: " + p.string());
}

struct Manifest {
  std::string stage;
  std::string seed = "-";
  std::vector<std::pair<std::string, std::string>> inputs;   // relpath, hash
  std::vector<std::pair<std::string, std::string>> outputs;

  void add_input(const fs::path& root, const fs::path& p) {
    inputs.push_back({fs::relative(p, root).generic_string(), hash_hex(p)});
  }
  void add_output(const fs::path& root, const fs::path& p) {
    outputs.push_back({fs::relative(p, root).generic_string(), hash_hex(p)});
  }
  static std::string hash_hex(const fs::path& p) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(p.string())));
    return buf;
  }
  void write(const fs::path& root) const {
    std::ofstream os(root / (stage + ".manifest"));
    require(os.good(), "manifest: cannot write for stage " + stage);
    os << "stage\t" << stage << "\n";
    os << "seed\t" << seed << "\n";
    for (const auto& [p, h] : inputs) os << "input\t" << p << "\t" << h << "\n";
    for (const auto& [p, h] : outputs) os << "output\t" << p << "\t" << h << "\n";
  }
};

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

struct StemInfo {
  int speaker = -1;
  int index = -1;
};

StemInfo parse_stem(const std::string& stem) {
  StemInfo info;
  int spk, idx;
  if (std::sscanf(stem.c_str(), "spk%d_utt%d", &spk, &idx) == 2) {
    info.speaker = spk;
    info.index = idx;
  }
  return info;
}

// mu-law code file: magic "QPC1", u32le count, raw bytes
void write_codes(const fs::path& path, const MuLawCode& codes) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "write_codes: cannot open " + path.string());
  os.write("QPC1", 4);
  const uint32_t n = static_cast<uint32_t>(codes.codes.size());
  unsigned char b[4] = {static_cast<unsigned char>(n & 0xff),
                        static_cast<unsigned char>((n >> 8) & 0xff),
                        static_cast<unsigned char>((n >> 16) & 0xff),
                        static_cast<unsigned char>((n >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
  os.write(reinterpret_cast<const char*>(codes.codes.data()), n);
}

// Utterances for one speaker list, split into train (index < holdout bound)
// and heldout tails.
struct SpeakerData {
  std::vector<UtteranceData> train;
  std::vector<UtteranceData> heldout;
};

UtteranceData load_utterance(const fs::path& wav, const fs::path& qpf,
                             const ArchitectureSpec& spec) {
  require_exists(wav, "corpus wav");
  require_exists(qpf, "feature file");
  WaveBuffer wave = read_wav(wav.string());
  FrameFeatures feats = read_features(qpf.string());
  return prepare_utterance(wave, feats, spec);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config decoding

AnalysisConfig analysis_config(const Config& cfg) {
  AnalysisConfig a;
  a.hop = cfg.i64_or("audio.hop", 110);
  a.window = cfg.i64_or("analysis.window", 512);
  a.mcep_order = static_cast<int>(cfg.i64_or("analysis.mcep_order", 34));
  a.f0_min = cfg.f64_or("analysis.f0_min", 70.0);
  a.f0_max = cfg.f64_or("analysis.f0_max", 400.0);
  a.voicing_threshold = cfg.f64_or("analysis.voicing_threshold", 0.45);
  a.f0_window_factor = cfg.f64_or("analysis.f0_window_factor", 4.0);
  return a;
}

ArchitectureSpec arch_from_config(const Config& cfg) {
  const std::string kind = cfg.str_or("arch.kind", "desk");
  ArchitectureSpec s;
  if (kind == "wnf") s = wnf_spec();
  else if (kind == "wnc") s = wnc_spec();
  else if (kind == "qpnet") s = qpnet_spec();
  else if (kind == "desk") s = desk_spec();
  else throw std::invalid_argument("arch.kind must be wnf|wnc|qpnet|desk, got " + kind);

  s.fixed_layers = static_cast<int>(cfg.i64_or("arch.fixed_layers", s.fixed_layers));
  s.fixed_repeats = static_cast<int>(cfg.i64_or("arch.fixed_repeats", s.fixed_repeats));
  s.adaptive_layers = static_cast<int>(cfg.i64_or("arch.adaptive_layers", s.adaptive_layers));
  s.adaptive_repeats =
      static_cast<int>(cfg.i64_or("arch.adaptive_repeats", s.adaptive_repeats));
  s.residual_channels =
      static_cast<int>(cfg.i64_or("arch.residual_channels", s.residual_channels));
  s.skip_channels = static_cast<int>(cfg.i64_or("arch.skip_channels", s.skip_channels));
  s.head_channels = static_cast<int>(cfg.i64_or("arch.head_channels", s.head_channels));
  s.a = static_cast<int>(cfg.i64_or("arch.a", s.a));
  s.adaptive_first = cfg.i64_or("arch.adaptive_first", 0) != 0;
  s.validate();
  return s;
}

CorpusConfig corpus_config(const Config& cfg) {
  CorpusConfig c;
  c.rate = static_cast<int>(cfg.i64_or("audio.rate", 22050));
  c.speakers = static_cast<int>(cfg.i64_or("corpus.speakers", 2));
  c.utterances = static_cast<int>(cfg.i64_or("corpus.utterances", 6));
  c.seconds = cfg.f64_or("corpus.seconds", 0.8);
  c.harmonics = static_cast<int>(cfg.i64_or("corpus.harmonics", 6));
  c.noise_level = cfg.f64_or("corpus.noise", 0.003);
  c.amplitude = cfg.f64_or("corpus.amplitude", 0.6);
  c.gap_prob = cfg.f64_or("corpus.gap_prob", 0.0);
  c.seed = cfg.seed_or("seed", 1);
  c.speaker_specs = default_speakers(c.speakers);
  for (int k = 0; k < c.speakers; ++k) {
    const std::string base = "corpus.speaker" + std::to_string(k);
    c.speaker_specs[static_cast<size_t>(k)].f0_min =
        cfg.f64_or(base + ".f0_min", c.speaker_specs[static_cast<size_t>(k)].f0_min);
    c.speaker_specs[static_cast<size_t>(k)].f0_max =
        cfg.f64_or(base + ".f0_max", c.speaker_specs[static_cast<size_t>(k)].f0_max);
    c.speaker_specs[static_cast<size_t>(k)].tilt =
        cfg.f64_or(base + ".tilt", c.speaker_specs[static_cast<size_t>(k)].tilt);
  }
  return c;
}

uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "fnv1a64_file: cannot open " + path);
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[8192];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    const std::streamsize n = is.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!is) break;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Stages

void stage_synth_corpus(const Config& cfg) {
  const fs::path root = ensure_dir(run_dir(cfg));
  const fs::path dir = ensure_dir(root / "corpus");
  CorpusConfig c = corpus_config(cfg);

  Manifest mf;
  mf.stage = "synth-corpus";
  mf.seed = std::to_string(c.seed);
  for (const CorpusUtterance& utt : synth_corpus(c)) {
    const std::string stem = utterance_stem(utt.speaker, utt.index);
    const fs::path wav = dir / (stem + ".wav");
    const fs::path f0 = dir / (stem + ".f0");
    write_wav(wav.string(), utt.wave);
    write_f0_sidecar(f0.string(), utt.f0_truth);
    mf.add_output(root, wav);
    mf.add_output(root, f0);
  }
  mf.write(root);
}

void stage_extract(const Config& cfg) {
  const fs::path root = run_dir(cfg);
  const fs::path src = root / "corpus";
  require_exists(src, "corpus directory");
  const fs::path dst = ensure_dir(root / "features");
  const AnalysisConfig acfg = analysis_config(cfg);

  Manifest mf;
  mf.stage = "extract";
  const auto wavs = sorted_files(src, ".wav");
  if (wavs.empty()) throw MissingInputError("no .wav files under " + src.string());
  for (const fs::path& wav : wavs) {
    WaveBuffer wave = read_wav(wav.string());
    FrameFeatures feats = extract_features(wave, acfg);
    const fs::path out = dst / (wav.stem().string() + ".qpf");
    write_features(out.string(), feats);
    mf.add_input(root, wav);
    mf.add_output(root, out);
  }
  mf.write(root);
}

namespace {

// Gathers corpus+feature pairs grouped by speaker; heldout = top
// `holdout` utterance indices of each speaker.
std::map<int, SpeakerData> load_speaker_data(const fs::path& root,
                                             const ArchitectureSpec& spec,
                                             int64_t holdout, Manifest* mf) {
  const fs::path fdir = root / "features";
  require_exists(fdir, "features directory");
  const auto qpfs = sorted_files(fdir, ".qpf");
  if (qpfs.empty()) throw MissingInputError("no .qpf files under " + fdir.string());

  std::map<int, int> max_index;
  for (const fs::path& qpf : qpfs) {
    const StemInfo info = parse_stem(qpf.stem().string());
    if (info.speaker >= 0)
      max_index[info.speaker] = std::max(max_index[info.speaker], info.index);
  }

  std::map<int, SpeakerData> out;
  for (const fs::path& qpf : qpfs) {
    const StemInfo info = parse_stem(qpf.stem().string());
    if (info.speaker < 0) continue;
    const fs::path wav = root / "corpus" / (qpf.stem().string() + ".wav");
    UtteranceData utt = load_utterance(wav, qpf, spec);
    if (mf) {
      mf->add_input(root, wav);
      mf->add_input(root, qpf);
    }
    const bool heldout = info.index > max_index[info.speaker] - holdout;
    if (heldout)
      out[info.speaker].heldout.push_back(std::move(utt));
    else
      out[info.speaker].train.push_back(std::move(utt));
  }
  return out;
}

int aux_dim_of(const fs::path& root) {
  const auto qpfs = sorted_files(root / "features", ".qpf");
  if (qpfs.empty()) throw MissingInputError("no feature files to size the network");
  FrameFeatures f = read_features(qpfs.front().string());
  return f.aux_dim();
}

void write_curve(const fs::path& path, const std::vector<double>& curve, int64_t every) {
  std::ofstream os(path);
  require(os.good(), "write_curve: cannot open " + path.string());
  char buf[64];
  for (size_t i = 0; i < curve.size(); ++i) {
    if ((i + 1) % static_cast<size_t>(every) != 0 && i + 1 != curve.size() && i != 0)
      continue;
    std::snprintf(buf, sizeof(buf), "%lld\t%.9f\n", static_cast<long long>(i + 1),
                  curve[i]);
    os << buf;
  }
}

}  // namespace

void stage_train_vocoder(const Config& cfg) {
  const fs::path root = run_dir(cfg);
  const ArchitectureSpec spec = arch_from_config(cfg);
  const int64_t holdout = cfg.i64_or("train.holdout", 2);

  Manifest mf;
  mf.stage = "train-vocoder";
  auto speakers = load_speaker_data(root, spec, holdout, &mf);
  std::vector<UtteranceData> data;
  for (auto& [spk, sd] : speakers)
    for (UtteranceData& u : sd.train) data.push_back(std::move(u));
  if (data.empty()) throw MissingInputError("no training utterances after holdout split");

  VocoderTrainConfig tcfg;
  tcfg.steps = cfg.i64_or("train.steps", 2000);
  tcfg.window = cfg.i64_or("train.window", 1024);
  tcfg.batch_samples = cfg.i64_or("train.batch_samples", 4096);
  tcfg.lr = cfg.f64_or("train.lr", 1e-4);
  tcfg.seed = cfg.seed_or("train.seed", cfg.seed_or("seed", 1));
  mf.seed = std::to_string(tcfg.seed);

  VocoderParams params = build_vocoder(spec, aux_dim_of(root), tcfg.seed);
  std::vector<double> curve = train_vocoder(params, data, tcfg);

  const std::string name =
      cfg.str_or("train.name", "si_" + cfg.str_or("arch.kind", "desk"));
  const fs::path ckpt = ensure_dir(root / "models") / (name + ".qpw");
  save_vocoder(ckpt.string(), params);
  const fs::path curve_path = ensure_dir(root / "ledgers") / ("train_" + name + ".tsv");
  write_curve(curve_path, curve, cfg.i64_or("train.log_every", 100));
  mf.add_output(root, ckpt);
  mf.add_output(root, curve_path);
  mf.write(root);
}

void stage_adapt(const Config& cfg) {
  const fs::path root = run_dir(cfg);
  const std::string arch_kind = cfg.str_or("arch.kind", "desk");
  const fs::path ckpt_in =
      root / cfg.str_or("adapt.checkpoint", "models/si_" + arch_kind + ".qpw");
  require_exists(ckpt_in, "SI checkpoint");
  VocoderParams params = load_vocoder(ckpt_in.string());

  const int target = static_cast<int>(cfg.i64("adapt.speaker"));
  const int64_t holdout = cfg.i64_or("train.holdout", 2);

  Manifest mf;
  mf.stage = "adapt";
  mf.add_input(root, ckpt_in);
  auto speakers = load_speaker_data(root, params.spec, holdout, &mf);
  if (speakers.find(target) == speakers.end())
    throw MissingInputError("no data for adapt.speaker " + std::to_string(target));
  SpeakerData& sd = speakers[target];
  if (sd.heldout.empty())
    throw MissingInputError("holdout split left no validation utterances");

  FinetuneConfig fcfg;
  fcfg.mode = finetune_mode_from_string(cfg.str_or("adapt.mode", "sda"));
  fcfg.iterations = cfg.i64_or(
      "adapt.iterations", fcfg.mode == FinetuneMode::kWholeNetwork ? 50 : 500);
  fcfg.window = cfg.i64_or("train.window", 1024);
  fcfg.batch_samples = cfg.i64_or("train.batch_samples", 4096);
  fcfg.lr = cfg.f64_or("adapt.lr", 1e-4);
  fcfg.ledger_every = cfg.i64_or("adapt.ledger_every", 5);
  fcfg.seed = cfg.seed_or("adapt.seed", cfg.seed_or("seed", 1) + 17);
  mf.seed = std::to_string(fcfg.seed);

  auto ledger = finetune(params, sd.train, sd.heldout, fcfg);

  const std::string mode_name =
      fcfg.mode == FinetuneMode::kWholeNetwork ? "sda" : "sdo";
  const std::string name =
      "sd_" + arch_kind + "_" + mode_name + "_spk" + std::to_string(target);
  const fs::path ckpt_out = ensure_dir(root / "models") / (name + ".qpw");
  save_vocoder(ckpt_out.string(), params);
  const fs::path ledger_path = ensure_dir(root / "ledgers") / (name + ".tsv");
  write_ledger(ledger_path.string(), ledger);
  mf.add_output(root, ckpt_out);
  mf.add_output(root, ledger_path);
  mf.write(root);
}

void stage_train_converter(const Config& cfg) {
  const fs::path root = run_dir(cfg);
  const int src = static_cast<int>(cfg.i64("converter.source"));
  const int tgt = static_cast<int>(cfg.i64("converter.target"));
  const int64_t holdout = cfg.i64_or("train.holdout", 2);
  const fs::path fdir = root / "features";
  require_exists(fdir, "features directory");

  Manifest mf;
  mf.stage = "train-converter";
  std::vector<FrameFeatures> src_feats, tgt_feats;
  std::map<int, std::vector<fs::path>> by_spk;
  for (const fs::path& qpf : sorted_files(fdir, ".qpf")) {
    const StemInfo info = parse_stem(qpf.stem().string());
    if (info.speaker == src || info.speaker == tgt) by_spk[info.speaker].push_back(qpf);
  }
  if (by_spk[src].empty() || by_spk[tgt].empty())
    throw MissingInputError("missing features for converter speaker pair");
  const size_t n = std::min(by_spk[src].size(), by_spk[tgt].size());
  const size_t train_n = n > static_cast<size_t>(holdout) ? n - holdout : n;
  for (size_t i = 0; i < train_n; ++i) {
    src_feats.push_back(read_features(by_spk[src][i].string()));
    tgt_feats.push_back(read_features(by_spk[tgt][i].string()));
    mf.add_input(root, by_spk[src][i]);
    mf.add_input(root, by_spk[tgt][i]);
  }

  ConverterConfig ccfg;
  ccfg.hidden_layers = static_cast<int>(cfg.i64_or("converter.hidden_layers", 2));
  ccfg.hidden_units = static_cast<int>(cfg.i64_or("converter.hidden_units", 64));
  ccfg.epochs = static_cast<int>(cfg.i64_or("converter.epochs", 300));
  ccfg.lr = cfg.f64_or("converter.lr", 0.05);
  ccfg.seed = cfg.seed_or("converter.seed", cfg.seed_or("seed", 1) + 29);
  mf.seed = std::to_string(ccfg.seed);

  ConverterTraining trained = train_converter(src_feats, tgt_feats, ccfg);
  const std::string name = "conv_s" + std::to_string(src) + "t" + std::to_string(tgt);
  const fs::path out = ensure_dir(root / "models") / (name + ".qpw");
  save_converter(out.string(), trained.model);
  const fs::path curve_path = ensure_dir(root / "ledgers") / (name + ".tsv");
  write_curve(curve_path, trained.loss_curve, cfg.i64_or("converter.log_every", 10));
  mf.add_output(root, out);
  mf.add_output(root, curve_path);
  mf.write(root);
}

void stage_convert(const Config& cfg) {
  const fs::path root = run_dir(cfg);
  const int src = static_cast<int>(cfg.i64("converter.source"));
  const int tgt = static_cast<int>(cfg.i64("converter.target"));
  const std::string name = "conv_s" + std::to_string(src) + "t" + std::to_string(tgt);
  const fs::path model_path = root / cfg.str_or("convert.model", "models/" + name + ".qpw");
  require_exists(model_path, "converter model");
  ConversionModel model = load_converter(model_path.string());

  const bool all = cfg.str_or("convert.utts", "heldout") == "all";
  const int64_t holdout = cfg.i64_or("train.holdout", 2);
  const fs::path fdir = root / "features";
  require_exists(fdir, "features directory");

  std::vector<fs::path> sources;
  for (const fs::path& qpf : sorted_files(fdir, ".qpf"))
    if (parse_stem(qpf.stem().string()).speaker == src) sources.push_back(qpf);
  if (sources.empty())
    throw MissingInputError("no feature files for source speaker " + std::to_string(src));
  if (!all && static_cast<int64_t>(sources.size()) > holdout)
    sources.erase(sources.begin(), sources.end() - holdout);

  Manifest mf;
  mf.stage = "convert";
  mf.add_input(root, model_path);
  const fs::path dst = ensure_dir(root / "converted" / name);
  for (const fs::path& qpf : sources) {
    FrameFeatures in = read_features(qpf.string());
    if (in.mcep_dim() != model.mcep_order)
      throw CompatError("feature order does not match converter: " + qpf.string());
    FrameFeatures out = convert_features(model, in);
    const fs::path out_path = dst / qpf.filename();
    write_features(out_path.string(), out);
    mf.add_input(root, qpf);
    mf.add_output(root, out_path);
  }
  mf.write(root);
}

void stage_generate(const Config& cfg) {
  const fs::path root = run_dir(cfg);
  const fs::path ckpt_path = root / cfg.str("generate.checkpoint");
  require_exists(ckpt_path, "vocoder checkpoint");
  VocoderParams params = load_vocoder(ckpt_path.string());

  const fs::path feat_dir = root / cfg.str_or("generate.features", "features");
  require_exists(feat_dir, "feature directory");
  const std::string select = cfg.str_or("generate.select", "");
  const std::string tag = cfg.str_or("generate.tag", "run");
  const double temperature = cfg.f64_or("generate.temperature", 1.0);
  const uint64_t seed = cfg.seed_or("generate.seed", cfg.seed_or("seed", 1) + 41);
  const int rate = static_cast<int>(cfg.i64_or("audio.rate", 22050));
  const Precision prec = cfg.str_or("generate.precision", "double") == "single"
                             ? Precision::kSingle
                             : Precision::kDouble;

  Manifest mf;
  mf.stage = "generate";
  mf.seed = std::to_string(seed);
  const fs::path dst = ensure_dir(root / "generated" / tag);
  bool any = false;
  uint64_t utt_seed = seed;
  for (const fs::path& qpf : sorted_files(feat_dir, ".qpf")) {
    const std::string stem = qpf.stem().string();
    if (!select.empty() && stem.find(select) == std::string::npos) continue;
    any = true;

    FrameFeatures feats = read_features(qpf.string());
    if (feats.aux_dim() != params.aux_dim)
      throw CompatError("feature dims do not match checkpoint: " + qpf.string());
    Tensor aux = aux_channels(upsample_features(feats));
    DilationPlan plan;
    if (params.spec.adaptive_blocks() > 0) {
      std::vector<double> f0(static_cast<size_t>(aux.cols()));
      for (int64_t t = 0; t < aux.cols(); ++t) f0[static_cast<size_t>(t)] = aux.data[static_cast<size_t>(t)];
      plan = build_plan(params.spec, pitch_dilation_factors(f0, rate, params.spec.a));
    } else {
      plan = build_plan(params.spec, {});
    }

    utt_seed = utt_seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL;
    GenerateResult gen = generate(params, aux, plan, rate, utt_seed, temperature, prec);
    const fs::path wav = dst / (stem + ".wav");
    const fs::path qpc = dst / (stem + ".qpc");
    const fs::path qpf_copy = dst / (stem + ".qpf");
    write_wav(wav.string(), gen.wave);
    write_codes(qpc, gen.codes);
    fs::copy_file(qpf, qpf_copy, fs::copy_options::overwrite_existing);
    mf.add_input(root, qpf);
    mf.add_output(root, wav);
    mf.add_output(root, qpc);
    mf.add_output(root, qpf_copy);
  }
  if (!any) throw MissingInputError("generate matched no feature files");
  mf.add_input(root, ckpt_path);
  mf.write(root);
}

void stage_evaluate(const Config& cfg) {
  const fs::path root = run_dir(cfg);
  const std::string tag = cfg.str_or("evaluate.tag", cfg.str_or("generate.tag", "run"));
  const fs::path dir = root / cfg.str_or("evaluate.dir", "generated/" + tag);
  require_exists(dir, "generated directory");
  const AnalysisConfig acfg = analysis_config(cfg);

  std::vector<EvalPair> pairs;
  Manifest mf;
  mf.stage = "evaluate";
  for (const fs::path& wav : sorted_files(dir, ".wav")) {
    fs::path qpf = wav;
    qpf.replace_extension(".qpf");
    if (!fs::exists(qpf))
      throw MissingInputError("no conditioning features beside " + wav.string());
    pairs.push_back({wav.stem().string(), wav.string(), qpf.string()});
    mf.add_input(root, wav);
    mf.add_input(root, qpf);
  }
  if (pairs.empty()) throw MissingInputError("no .wav files under " + dir.string());

  std::vector<EvalRow> rows = evaluate_run(pairs, acfg);
  const fs::path report = ensure_dir(root / "reports") / (tag + ".tsv");
  write_report(report.string(), rows);
  mf.add_output(root, report);
  mf.write(root);
}

std::string stage_plan_report(const Config& cfg) {
  const ArchitectureSpec spec = arch_from_config(cfg);
  const int rate = static_cast<int>(cfg.i64_or("audio.rate", 22050));
  DilationPlan plan;
  if (spec.adaptive_blocks() > 0) {
    std::vector<double> f0;
    if (cfg.has("plan.features")) {
      FrameFeatures feats = read_features(cfg.str("plan.features"));
      Tensor aux = aux_channels(upsample_features(feats));
      f0.resize(static_cast<size_t>(aux.cols()));
      for (int64_t t = 0; t < aux.cols(); ++t) f0[static_cast<size_t>(t)] = aux.data[static_cast<size_t>(t)];
    } else {
      f0.assign(1, cfg.f64_or("plan.f0", 180.0));
    }
    plan = build_plan(spec, pitch_dilation_factors(f0, rate, spec.a));
  } else {
    plan = build_plan(spec, {});
  }
  return plan_report(spec, plan);
}

void run_stage(const std::string& stage, const Config& cfg) {
  if (stage == "synth-corpus") return stage_synth_corpus(cfg);
  if (stage == "extract") return stage_extract(cfg);
  if (stage == "train-vocoder") return stage_train_vocoder(cfg);
  if (stage == "adapt") return stage_adapt(cfg);
  if (stage == "train-converter") return stage_train_converter(cfg);
  if (stage == "convert") return stage_convert(cfg);
  if (stage == "generate") return stage_generate(cfg);
  if (stage == "evaluate") return stage_evaluate(cfg);
  throw std::invalid_argument("unknown stage: " + stage);
}

}  // namespace qpnet
