#include "veridict/rde.hpp"

#include <cmath>
#include <fstream>

#include "veridict/parallel.hpp"
#include "veridict/rng.hpp"
#include "veridict/textio.hpp"

namespace veridict {

double payoff(int claimed) {
  if (claimed < 1 || claimed > 6)
    throw ValidationError("claimed face must lie in 1..6, got " + std::to_string(claimed));
  return claimed == 6 ? 0.0 : static_cast<double>(claimed);
}

double RdeLedger::honest_fraction() const {
  std::size_t n = total();
  if (n == 0) return 0.0;
  return static_cast<double>(truthful) / static_cast<double>(n);
}

std::size_t RdeLedger::no_roll_paid() const {
  std::size_t n = 0;
  for (int c = 1; c <= 6; ++c)
    if (payoff(c) > 0.0) n += matrix[0][static_cast<std::size_t>(c - 1)];
  return n;
}

RdeLedger build_ledger(std::span<const DiceRecord> records) {
  if (records.empty()) throw ValidationError("cannot build a ledger from no records");
  RdeLedger led;
  for (const auto& r : records) {
    if (r.actual < 0 || r.actual > 6)
      throw ValidationError("actual roll must lie in 0..6 for subject " + r.subject_id);
    double claim_pay = payoff(r.claimed);  // validates claimed range
    led.matrix[static_cast<std::size_t>(r.actual)][static_cast<std::size_t>(r.claimed - 1)]++;
    if (r.actual == 0) {
      ++led.no_roll;
    } else if (r.claimed == r.actual) {
      ++led.truthful;
    } else if (claim_pay > payoff(r.actual)) {
      ++led.overclaimed;
    } else {
      ++led.underclaimed;
    }
  }
  return led;
}

DeviationResult deviation_from_ideal(std::size_t n_rolls, std::size_t n_sims, std::uint64_t seed,
                                     int n_threads) {
  if (n_rolls < 6) throw ValidationError("need at least 6 rolls");
  if (n_sims < 2) throw ValidationError("need at least 2 simulations");

  DeviationResult out;
  out.per_sim.assign(n_sims, 0.0);
  parallel_for(n_sims, n_threads, [&](std::size_t s) {
    Rng rng(derive_seed(seed, 0x53494DULL, s));
    std::array<std::size_t, 6> counts{};
    for (std::size_t i = 0; i < n_rolls; ++i) counts[rng.uniform_index(6)]++;
    const double ideal = 1.0 / 6.0;
    double dev = 0.0;
    for (std::size_t f = 0; f < 6; ++f) {
      double freq = static_cast<double>(counts[f]) / static_cast<double>(n_rolls);
      dev += std::abs(freq - ideal) / ideal;
    }
    out.per_sim[s] = dev / 6.0 * 100.0;
  });

  double mean = 0.0;
  for (double v : out.per_sim) mean += v;
  mean /= static_cast<double>(n_sims);
  double ss = 0.0;
  for (double v : out.per_sim) ss += (v - mean) * (v - mean);
  out.mean = mean;
  out.stddev = std::sqrt(ss / static_cast<double>(n_sims - 1));
  return out;
}

BlindEstimate estimate_lie_rate_blind(const std::array<std::size_t, 6>& claims) {
  BlindEstimate est;
  for (std::size_t c : claims) est.total += c;
  if (est.total == 0) throw ValidationError("empty claim histogram");
  const double n = static_cast<double>(est.total);
  const double ideal = 1.0 / 6.0;
  const double se = std::sqrt(ideal * (1.0 - ideal) / n);
  for (std::size_t f = 0; f < 6; ++f) {
    est.freq[f] = static_cast<double>(claims[f]) / n;
    est.excess[f] = est.freq[f] - ideal;
    est.se[f] = se;
    if (est.excess[f] > 0.0) est.excess_mass += est.excess[f];
  }
  return est;
}

std::array<std::size_t, 6> claim_histogram(std::span<const DiceRecord> records) {
  std::array<std::size_t, 6> hist{};
  for (const auto& r : records) {
    if (r.claimed < 1 || r.claimed > 6)
      throw ValidationError("claimed face must lie in 1..6 for subject " + r.subject_id);
    hist[static_cast<std::size_t>(r.claimed - 1)]++;
  }
  return hist;
}

std::vector<DiceRecord> load_dice_records(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(file.string() + ": empty file");
  std::vector<std::string> header = split_csv_line(line);
  if (header != std::vector<std::string>{"subject_id", "actual", "claimed"})
    throw ValidationError(file.string() + ": expected header subject_id,actual,claimed");

  std::vector<DiceRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != 3)
      throw ValidationError(file.string() + ":" + std::to_string(line_no) +
                            ": expected 3 columns");
    DiceRecord r;
    r.subject_id = cells[0];
    std::string where = file.string() + ":" + std::to_string(line_no);
    double actual = parse_double_or_throw(cells[1], where);
    double claimed = parse_double_or_throw(cells[2], where);
    r.actual = static_cast<int>(actual);
    r.claimed = static_cast<int>(claimed);
    if (static_cast<double>(r.actual) != actual || static_cast<double>(r.claimed) != claimed)
      throw ValidationError(file.string() + ":" + std::to_string(line_no) +
                            ": rolls must be integers");
    if (r.actual < 0 || r.actual > 6 || r.claimed < 1 || r.claimed > 6)
      throw ValidationError(file.string() + ":" + std::to_string(line_no) +
                            ": roll out of range");
    out.push_back(std::move(r));
  }
  if (out.empty()) throw ValidationError(file.string() + ": no records");
  return out;
}

}  // namespace veridict
