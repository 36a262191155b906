#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"
#include "swinggp/ensemble_io.hpp"

using namespace swinggp;

namespace {

Ensemble small_ensemble(std::uint64_t seed = 31) {
  SimConfig sim;
  sim.t_end = 0.5;
  sim.seed = seed;
  return run_ensemble(GridParams{}, OuParams{}, sim, 6);
}

}  // namespace

TEST(EnsembleIo, RoundTripIsBitwise) {
  const auto dir = oracle::scratch_dir("io_roundtrip");
  const Ensemble e = small_ensemble();
  save_ensemble(e, dir / "e.bin");
  const Ensemble back = load_ensemble(dir / "e.bin");
  EXPECT_TRUE(back == e);
  EXPECT_EQ(back.master_seed(), 31u);
  EXPECT_EQ(back.grid(), e.grid());
  EXPECT_EQ(back.sim(), e.sim());
}

TEST(EnsembleIo, FixedModeAndTwoRealizationsRoundTrip) {
  SimConfig sim;
  sim.t_end = 0.05;
  sim.init_pm_mode = InitPmMode::Fixed;
  sim.init_pm_value = -0.02;
  const Ensemble e = run_ensemble(GridParams{}, OuParams{0.05, 0.1}, sim, 2);
  EXPECT_TRUE(decode_ensemble(encode_ensemble(e)) == e);
}

TEST(EnsembleIo, HeaderLayout) {
  const Ensemble e = small_ensemble();
  const auto bytes = encode_ensemble(e);
  ASSERT_EQ(bytes.size(), kEnsembleHeaderBytes + 6 * 201 * 3 * 8 + 8);
  EXPECT_EQ(std::memcmp(bytes.data(), "SWINGGP", 8), 0);
  EXPECT_EQ(bytes[8], 1);  // major, little-endian
  EXPECT_EQ(bytes[40], 'T');
  EXPECT_EQ(bytes[41], 'W');
  EXPECT_EQ(bytes[42], 'P');
  // First payload value is realization 0, k = 0, theta.
  double theta0;
  std::memcpy(&theta0, bytes.data() + kEnsembleHeaderBytes, 8);
  EXPECT_EQ(theta0, 0.45);
  // Third payload value is realization 0, k = 0, P'_m.
  double pm0;
  std::memcpy(&pm0, bytes.data() + kEnsembleHeaderBytes + 16, 8);
  EXPECT_EQ(pm0, e.value(0, Variable::PmPrime, 0));
}

TEST(EnsembleIo, TruncatedFileIsChecksumMismatch) {
  auto bytes = encode_ensemble(small_ensemble());
  for (std::size_t cut : {std::size_t{1}, std::size_t{9}, bytes.size() / 2, bytes.size() - 150}) {
    std::vector<unsigned char> t(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW((void)decode_ensemble(t), ChecksumMismatch) << "cut at " << cut;
  }
}

TEST(EnsembleIo, CorruptedPayloadIsChecksumMismatch) {
  auto bytes = encode_ensemble(small_ensemble());
  bytes[kEnsembleHeaderBytes + 100] ^= 0x01;
  EXPECT_THROW((void)decode_ensemble(bytes), ChecksumMismatch);
}

TEST(EnsembleIo, NewerMajorVersionIsRejected) {
  auto bytes = encode_ensemble(small_ensemble());
  bytes[8] = 2;
  EXPECT_THROW((void)decode_ensemble(bytes), FormatVersionMismatch);
}

TEST(EnsembleIo, NotAnEnsembleFile) {
  auto bytes = encode_ensemble(small_ensemble());
  bytes[0] = 'X';
  EXPECT_THROW((void)decode_ensemble(bytes), IoError);
  EXPECT_THROW((void)load_ensemble("/nonexistent/dir/e.bin"), IoError);
}

TEST(EnsembleIo, SameSeedSameChecksum) {
  EXPECT_EQ(ensemble_checksum(small_ensemble(5)), ensemble_checksum(small_ensemble(5)));
  EXPECT_NE(ensemble_checksum(small_ensemble(5)), ensemble_checksum(small_ensemble(6)));
}
