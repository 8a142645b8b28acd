#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "veridict/types.hpp"

namespace veridict {

// One subject's report: actual = 0 means the subject did not roll at all.
struct DiceRecord {
  std::string subject_id;
  int actual = 0;   // 0..6
  int claimed = 1;  // 1..6
};

// Reward in euros for a claimed face; a 6 pays nothing.
double payoff(int claimed);

// Claim-vs-actual tally. Rollers are partitioned by payoff comparison:
// truthful (claimed == actual), overclaimed (payoff up), underclaimed
// (payoff down, which includes claiming 6 after any positive roll).
// Non-rollers land in no_roll regardless of claim.
struct RdeLedger {
  std::size_t truthful = 0;
  std::size_t overclaimed = 0;
  std::size_t underclaimed = 0;
  std::size_t no_roll = 0;
  // matrix[actual][claimed - 1], actual 0..6.
  std::array<std::array<std::size_t, 6>, 7> matrix{};

  std::size_t total() const { return truthful + overclaimed + underclaimed + no_roll; }
  double honest_fraction() const;
  // Non-rollers whose claim pays out; a claim-driven reading of the no_roll
  // bucket, reported alongside it rather than merged into overclaimed so the
  // four counts above stay an exact partition.
  std::size_t no_roll_paid() const;
};

RdeLedger build_ledger(std::span<const DiceRecord> records);

struct DeviationResult {
  double mean = 0.0;
  double stddev = 0.0;  // sample std over simulations
  std::vector<double> per_sim;
};

// Monte Carlo deviation from the ideal die distribution: per simulation,
// n_rolls fair rolls, deviation = mean over the six faces of
// |frequency - 1/6| / (1/6) * 100. Simulations use independent derived RNG
// streams, so results are identical serial or parallel.
DeviationResult deviation_from_ideal(std::size_t n_rolls, std::size_t n_sims, std::uint64_t seed,
                                     int n_threads = 1);

struct BlindEstimate {
  std::size_t total = 0;
  std::array<double, 6> freq{};    // observed claim frequency per face
  std::array<double, 6> excess{};  // freq - 1/6
  std::array<double, 6> se{};      // binomial SE of freq under the fair null
  double excess_mass = 0.0;        // sum of positive excess; indicative lower-bound signal
};

// Claims-only deception signal for settings without ground-truth rolls. The
// excess mass understates mixed lying strategies; it is a screening number,
// not an exact rate.
BlindEstimate estimate_lie_rate_blind(const std::array<std::size_t, 6>& claims);

std::array<std::size_t, 6> claim_histogram(std::span<const DiceRecord> records);

// CSV with header subject_id,actual,claimed.
std::vector<DiceRecord> load_dice_records(const std::filesystem::path& file);

}  // namespace veridict
