#include "gtest/gtest.h"
#include "probekit/binary_io.h"
#include "probekit/checkpoint.h"
#include "probekit/error.h"
#include "support/temp_dir.h"

namespace probekit {
namespace {

using testing::Slurp;
using testing::Spit;
using testing::TempDir;

TEST(BinaryIo, LittleEndianLayout) {
  binio::Writer w;
  w.U32(0x01020304u);
  w.F32(1.0f);
  const std::string bytes = w.Take();
  ASSERT_EQ(bytes.size(), 8u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 0x04);
  EXPECT_EQ(static_cast<unsigned char>(bytes[3]), 0x01);
  EXPECT_EQ(static_cast<unsigned char>(bytes[7]), 0x3f);
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 0x80);
}

TEST(BinaryIo, ReaderRoundTripAndTruncation) {
  binio::Writer w;
  w.U64(42);
  w.F64(-0.25);
  w.String("héllo");
  const std::string bytes = w.Take();
  binio::Reader r(bytes);
  EXPECT_EQ(r.U64(), 42u);
  EXPECT_EQ(r.F64(), -0.25);
  EXPECT_EQ(r.String(), "héllo");
  EXPECT_EQ(r.remaining(), 0u);
  binio::Reader short_reader(std::string_view(bytes).substr(0, 10));
  short_reader.U64();
  EXPECT_THROW(short_reader.F64(), ValidationError);
}

TEST(Checkpoint, RoundTripsValuesExactly) {
  TempDir dir;
  Parameter a("a", 2, 3), b("b", 1, 1);
  a.value = Matrix(2, 3, {1e-300, -0.0, 3.5, 1.0 / 3.0, 2e10, -7});
  b.value(0, 0) = 0.1;
  nlohmann::ordered_json meta = {{"kind", "test"}, {"optimizer", {{"lr", 1e-4}}}};
  SaveCheckpoint(dir.File("c.bin"), meta, {&a, &b});
  const Checkpoint ck = LoadCheckpoint(dir.File("c.bin"));
  EXPECT_EQ(ck.meta, meta);
  EXPECT_EQ(ck.Value("a", 2, 3), a.value);
  EXPECT_EQ(ck.Value("b", 1, 1), b.value);
  EXPECT_THROW(ck.Value("a", 3, 2), ValidationError);
  EXPECT_THROW(ck.Value("zzz", 1, 1), ValidationError);

  SaveCheckpoint(dir.File("d.bin"), ck.meta, {&ck.params[0], &ck.params[1]});
  EXPECT_EQ(Slurp(dir.File("c.bin")), Slurp(dir.File("d.bin")));
}

TEST(Checkpoint, RejectsCorruptFiles) {
  TempDir dir;
  Parameter a("a", 2, 2);
  SaveCheckpoint(dir.File("c.bin"), {{"kind", "x"}}, {&a});
  const std::string good = Slurp(dir.File("c.bin"));
  Spit(dir.File("trunc.bin"), good.substr(0, good.size() - 3));
  EXPECT_THROW(LoadCheckpoint(dir.File("trunc.bin")), ValidationError);
  Spit(dir.File("extra.bin"), good + "x");
  EXPECT_THROW(LoadCheckpoint(dir.File("extra.bin")), ValidationError);
  Spit(dir.File("magic.bin"), "NOTACKPT" + good.substr(8));
  EXPECT_THROW(LoadCheckpoint(dir.File("magic.bin")), ValidationError);
  EXPECT_THROW(LoadCheckpoint(dir.File("missing.bin")), ValidationError);
}

}  // namespace
}  // namespace probekit
