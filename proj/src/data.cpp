#include "veridict/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"
#include "veridict/rng.hpp"
#include "veridict/textio.hpp"

namespace veridict {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kEmotionSumTol = 1e-6;

bool frame_valid(const FrameFeatures& f) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(f.gaze_yaw) || !finite(f.gaze_pitch) || !finite(f.head_yaw) ||
      !finite(f.head_pitch) || !finite(f.head_roll) || !finite(f.valence) || !finite(f.arousal))
    return false;
  for (double a : f.au)
    if (!finite(a) || a < 0.0 || a > 5.0) return false;
  double sum = 0.0;
  for (double p : f.emotion_probs) {
    if (!finite(p) || p < 0.0) return false;
    sum += p;
  }
  if (std::abs(sum - 1.0) > kEmotionSumTol) return false;
  if (std::abs(f.valence) > 1.0 || std::abs(f.arousal) > 1.0) return false;
  return true;
}

struct ManifestEntry {
  std::string sample_id, subject_id, file;
  Label label;
  double fps;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("missing manifest: " + file.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw ValidationError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    ManifestEntry e;
    try {
      e.sample_id = j.at("sample_id").get<std::string>();
      e.subject_id = j.at("subject_id").get<std::string>();
      e.label = parse_label(j.at("label").get<std::string>());
      e.fps = j.at("fps").get<double>();
      e.file = j.at("file").get<std::string>();
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e2) {
      throw ValidationError("manifest line " + std::to_string(lineno) + ": " + e2.what());
    }
    if (!(e.fps > 0.0))
      throw ValidationError("manifest line " + std::to_string(lineno) + ": fps must be > 0");
    if (!seen.insert(e.sample_id).second)
      throw ValidationError("duplicate sample_id '" + e.sample_id + "' in manifest");
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace

const std::array<std::string, 8>& FeatureSchema::emotion_names() {
  static const std::array<std::string, 8> names = {"neutral",  "happy", "sad",   "surprise",
                                                   "fear",     "disgust", "anger", "contempt"};
  return names;
}

std::vector<std::string> FeatureSchema::csv_header() const {
  std::vector<std::string> h = {"frame", "gaze_yaw", "gaze_pitch",
                                "head_yaw", "head_pitch", "head_roll"};
  for (const auto& au : au_names) h.push_back(au);
  for (const auto& e : emotion_names()) h.push_back("p_" + e);
  h.push_back("valence");
  h.push_back("arousal");
  return h;
}

Dataset load_dataset(const std::filesystem::path& dir, const FeatureSchema& schema,
                     std::vector<std::string>* diagnostics) {
  auto entries = read_manifest(dir / "manifest.jsonl");
  const auto header = schema.csv_header();

  Dataset ds;
  ds.dataset_id = dir.has_filename() ? dir.filename().string() : dir.string();
  for (const auto& e : entries) {
    std::filesystem::path file = dir / e.file;
    std::ifstream in(file);
    if (!in) throw ValidationError("missing sample file: " + file.string());

    std::string line;
    if (!std::getline(in, line))
      throw ValidationError("empty sample file: " + file.string());
    auto cols = split_csv_line(line);
    if (cols != header)
      throw ValidationError("unexpected header in " + file.string());

    Sample s;
    s.sample_id = e.sample_id;
    s.subject_id = e.subject_id;
    s.dataset_id = ds.dataset_id;
    s.label = e.label;
    s.fps = e.fps;
    s.au_names = schema.au_names;

    std::size_t total = 0, dropped = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      auto fields = split_csv_line(line);
      if (fields.size() != header.size())
        throw ValidationError("wrong field count in " + file.string());
      ++total;

      FrameFeatures f;
      std::vector<double> vals(fields.size());
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (!try_parse_double(fields[i], vals[i])) {
          // Unparseable text is a file defect, not a measurement dropout.
          throw ValidationError("cannot parse '" + fields[i] + "' in " + file.string());
        }
      }
      std::size_t k = 1;  // skip frame index
      f.gaze_yaw = vals[k++];
      f.gaze_pitch = vals[k++];
      f.head_yaw = vals[k++];
      f.head_pitch = vals[k++];
      f.head_roll = vals[k++];
      f.au.resize(schema.au_names.size());
      for (double& a : f.au) a = vals[k++];
      for (double& p : f.emotion_probs) p = vals[k++];
      f.valence = vals[k++];
      f.arousal = vals[k++];

      if (!frame_valid(f)) {
        ++dropped;
        continue;
      }
      s.frames.push_back(std::move(f));
    }

    s.dropped_fraction = total == 0 ? 1.0 : static_cast<double>(dropped) / static_cast<double>(total);
    if (total == 0 || s.dropped_fraction > 0.5) {
      if (diagnostics)
        diagnostics->push_back("sample '" + e.sample_id + "' rejected: " +
                               std::to_string(dropped) + "/" + std::to_string(total) +
                               " rows invalid");
      continue;
    }
    ds.samples.push_back(std::move(s));
  }

  if (ds.samples.empty()) throw ValidationError("dataset is empty after validation: " + dir.string());
  std::sort(ds.samples.begin(), ds.samples.end(),
            [](const Sample& a, const Sample& b) { return a.sample_id < b.sample_id; });
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir,
                  const FeatureSchema& schema) {
  std::filesystem::create_directories(dir);
  const auto header = schema.csv_header();

  std::ofstream manifest(dir / "manifest.jsonl");
  if (!manifest) throw ValidationError("cannot write manifest in " + dir.string());
  for (const auto& s : ds.samples) {
    if (s.au_names != schema.au_names)
      throw ValidationError("sample '" + s.sample_id + "' AU set does not match schema");
    std::string file = s.sample_id + ".csv";
    ordered_json j;
    j["sample_id"] = s.sample_id;
    j["subject_id"] = s.subject_id;
    j["label"] = to_string(s.label);
    j["fps"] = s.fps;
    j["file"] = file;
    manifest << j.dump() << "\n";

    std::ofstream out(dir / file);
    if (!out) throw ValidationError("cannot write sample file " + file);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (std::size_t t = 0; t < s.frames.size(); ++t) {
      const auto& f = s.frames[t];
      out << t;
      out << "," << format_double(f.gaze_yaw) << "," << format_double(f.gaze_pitch);
      out << "," << format_double(f.head_yaw) << "," << format_double(f.head_pitch) << ","
          << format_double(f.head_roll);
      for (double a : f.au) out << "," << format_double(a);
      for (double p : f.emotion_probs) out << "," << format_double(p);
      out << "," << format_double(f.valence) << "," << format_double(f.arousal);
      out << "\n";
    }
  }
}

Dataset generate_synthetic(const SynthConfig& config, std::uint64_t seed,
                           const FeatureSchema& schema) {
  if (config.n_samples == 0) throw ValidationError("n_samples must be positive");
  if (config.frames_per_sample < 2) throw ValidationError("frames_per_sample must be >= 2");
  if (!(config.truth_fraction >= 0.0 && config.truth_fraction <= 1.0))
    throw ValidationError("truth_fraction must lie in [0, 1]");
  if (config.effect_mu_deg < 0.0) throw ValidationError("effect size mu must be non-negative");
  if (!(config.fps > 0.0)) throw ValidationError("fps must be positive");

  const std::size_t n_truth =
      static_cast<std::size_t>(std::lround(config.truth_fraction * static_cast<double>(config.n_samples)));
  const double arousal_sd_factor = std::sqrt(1.0 + config.effect_mu_deg / 30.0);

  int id_width = 1;
  for (std::size_t v = config.n_samples > 0 ? config.n_samples - 1 : 0; v >= 10; v /= 10) ++id_width;

  Dataset ds;
  ds.dataset_id = config.dataset_id;
  ds.samples.reserve(config.n_samples);

  for (std::size_t i = 0; i < config.n_samples; ++i) {
    Rng rng(derive_seed(seed, 0x53414D50ULL, i));
    Sample s;
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "s%0*zu", id_width, i);
    s.sample_id = idbuf;
    s.subject_id = "subj" + std::string(idbuf + 1);
    s.dataset_id = ds.dataset_id;
    s.label = i < n_truth ? Label::truth : Label::deception;
    s.fps = config.fps;
    s.au_names = schema.au_names;

    const double f = static_cast<double>(config.frames_per_sample);
    std::size_t lo = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(0.75 * f)));
    std::size_t hi = std::max(lo, static_cast<std::size_t>(std::floor(1.25 * f)));
    std::size_t n_frames = lo + rng.uniform_index(hi - lo + 1);

    const bool deceptive = s.label == Label::deception;
    const double yaw_mean = deceptive ? config.effect_mu_deg : 0.0;
    const double rho = 0.9;
    const double innov = std::sqrt(1.0 - rho * rho);

    // AR(1) state per channel; stationary std is the quoted sigma.
    double yaw = rng.normal(0.0, 5.0), pitch = rng.normal(0.0, 5.0), roll = rng.normal(0.0, 5.0);
    double gy = rng.normal(0.0, 0.08), gp = rng.normal(0.0, 0.08);
    double val = rng.normal(0.0, 0.2);
    const double aro_sd = deceptive ? 0.15 * arousal_sd_factor : 0.15;
    double aro = rng.normal(0.0, aro_sd);
    std::vector<double> au_base(schema.au_names.size());
    std::vector<double> au_state(schema.au_names.size());
    for (std::size_t a = 0; a < au_base.size(); ++a) {
      au_base[a] = rng.uniform(0.2, 1.2);
      au_state[a] = rng.normal(0.0, 0.3);
    }
    std::array<double, 8> emo_base{};
    emo_base[0] = 1.5;  // neutral dominates at rest
    for (std::size_t e = 1; e < 8; ++e) emo_base[e] = rng.normal(0.0, 0.5);
    std::array<double, 8> emo_state{};

    s.frames.reserve(n_frames);
    for (std::size_t t = 0; t < n_frames; ++t) {
      yaw = rho * yaw + innov * rng.normal(0.0, 5.0);
      pitch = rho * pitch + innov * rng.normal(0.0, 5.0);
      roll = rho * roll + innov * rng.normal(0.0, 5.0);
      gy = rho * gy + innov * rng.normal(0.0, 0.08);
      gp = rho * gp + innov * rng.normal(0.0, 0.08);
      val = rho * val + innov * rng.normal(0.0, 0.2);
      aro = rho * aro + innov * rng.normal(0.0, aro_sd);

      FrameFeatures fr;
      fr.gaze_yaw = gy;
      fr.gaze_pitch = gp;
      fr.head_yaw = yaw + yaw_mean;
      fr.head_pitch = pitch;
      fr.head_roll = roll;
      fr.au.resize(au_base.size());
      for (std::size_t a = 0; a < au_base.size(); ++a) {
        au_state[a] = rho * au_state[a] + innov * rng.normal(0.0, 0.3);
        fr.au[a] = std::clamp(au_base[a] + au_state[a], 0.0, 5.0);
      }
      double mx = -1e300;
      std::array<double, 8> logits{};
      for (std::size_t e = 0; e < 8; ++e) {
        emo_state[e] = rho * emo_state[e] + innov * rng.normal(0.0, 0.2);
        logits[e] = emo_base[e] + emo_state[e];
        mx = std::max(mx, logits[e]);
      }
      double sum = 0.0;
      for (std::size_t e = 0; e < 8; ++e) {
        fr.emotion_probs[e] = std::exp(logits[e] - mx);
        sum += fr.emotion_probs[e];
      }
      for (double& p : fr.emotion_probs) p /= sum;
      fr.valence = std::clamp(0.1 + val, -1.0, 1.0);
      fr.arousal = std::clamp(aro, -1.0, 1.0);
      s.frames.push_back(std::move(fr));
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

ManualFeatureTable load_manual_table(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open manual feature table: " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty manual feature table");
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "label")
    throw ValidationError("manual table header must start with sample_id,label");

  ManualFeatureTable t;
  t.feature_names.assign(header.begin() + 2, header.end());
  std::set<std::string> uniq(t.feature_names.begin(), t.feature_names.end());
  if (uniq.size() != t.feature_names.size())
    throw ValidationError("duplicate feature names in manual table");

  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ValidationError("wrong field count in manual table row");
    t.sample_ids.push_back(fields[0]);
    t.labels.push_back(parse_label(fields[1]));
    for (std::size_t i = 2; i < fields.size(); ++i) {
      double v = parse_double_or_throw(fields[i], "manual table");
      if (!std::isfinite(v)) throw ValidationError("non-finite value in manual table");
      t.values.push_back(v);
    }
    ++t.n_rows;
  }
  if (t.n_rows == 0) throw ValidationError("manual feature table has no rows");
  return t;
}

}  // namespace veridict
