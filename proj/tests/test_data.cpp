#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "semg/data.hpp"

#include <set>
#include <sstream>

using namespace semg;

namespace {

DatasetSpec small_spec(int gestures, int channels = 4) {
  DatasetSpec s;
  s.channels = channels;
  s.num_classes = gestures + 1;
  return s;
}

Recording parse(const std::string& text, DatasetSpec spec = {}) {
  spec.channels = 0;
  std::istringstream in(text);
  return read_csv(in, spec);
}

}  // namespace

TEST_CASE("window geometry in samples") {
  CHECK(ms_to_samples(260.0, 200.0) == 52);
  CHECK(ms_to_samples(25.0, 200.0) == 5);
  CHECK(ms_to_samples(260.0, 2000.0) == 520);
  CHECK(DatasetSpec::db5().window_samples() == 52);
  CHECK(DatasetSpec::db5().stride_samples() == 5);
  CHECK(DatasetSpec::db4().window_samples() == 520);
  CHECK(DatasetSpec::db4().channels == 12);
  CHECK(DatasetSpec::db5().channels == 16);
  CHECK(DatasetSpec::db5().num_classes == 54);
}

TEST_CASE("spec validation") {
  DatasetSpec s;
  s.overlap_ms = 260.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = {};
  s.sample_rate_hz = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  CHECK_NOTHROW(DatasetSpec::db5().validate());
}

TEST_CASE("CSV round trip is bit exact") {
  const auto rec = synth_recording(small_spec(3), 3, 2, 9);
  std::stringstream buf;
  write_csv(buf, rec);
  DatasetSpec spec = small_spec(3);
  const auto back = read_csv(buf, spec);
  CHECK(back == rec);
}

TEST_CASE("CSV with IMU columns") {
  const auto rec = parse("ch0,ch1,imu0,gesture,repetition\n1,2,0.5,0,0\n3,4,-0.5,1,1\n");
  CHECK(rec.channels() == 2);
  CHECK(rec.imu_channels() == 1);
  CHECK(rec.features().cols() == 3);
  CHECK(rec.features()(1, 2) == -0.5);
  std::stringstream buf;
  write_csv(buf, rec);
  CHECK(buf.str() == "ch0,ch1,imu0,gesture,repetition\n1,2,0.5,0,0\n3,4,-0.5,1,1\n");
}

TEST_CASE("CSV errors name the row") {
  try {
    parse("ch0,ch1,gesture,repetition\n1,2,0,0\n1,x,0,0\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("ch0,ch1,gesture,repetition\n1,2,0\n"), ParseError);
  CHECK_THROWS_AS(parse("ch0,ch1,gesture,repetition\n1,2,0.5,0\n"), ParseError);
  CHECK_THROWS_AS(parse("a,b,gesture,repetition\n1,2,0,0\n"), FormatError);
  CHECK_THROWS_AS(parse("ch0,ch1,repetition,gesture\n1,2,0,0\n"), FormatError);
  CHECK_THROWS_AS(parse(""), FormatError);
}

TEST_CASE("CSV rejects out-of-range labels") {
  DatasetSpec spec;
  spec.num_classes = 3;
  CHECK_THROWS_AS(parse("ch0,gesture,repetition\n1,3,1\n", spec), ValidationError);
  CHECK_THROWS_AS(parse("ch0,gesture,repetition\n1,-1,1\n", spec), ValidationError);
  CHECK_THROWS_AS(parse("ch0,gesture,repetition\n1,1,7\n", spec), ValidationError);
}

TEST_CASE("channel count is enforced when the spec names one") {
  DatasetSpec spec;
  spec.channels = 3;
  std::istringstream in("ch0,ch1,gesture,repetition\n1,2,0,0\n");
  CHECK_THROWS_AS(read_csv(in, spec), FormatError);
}

TEST_CASE("synthetic recordings are deterministic and well formed") {
  const auto spec = small_spec(4, 16);
  const auto a = synth_recording(spec, 4, 6, 7);
  const auto b = synth_recording(spec, 4, 6, 7);
  const auto c = synth_recording(spec, 4, 6, 8);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK_NOTHROW(a.validate(spec.num_classes, 6));
  CHECK(a.channels() == 16);
  CHECK(a.timesteps() == 4 * 6 * (600 + 400));
  std::set<int> gestures(a.gesture.begin(), a.gesture.end());
  CHECK(gestures == std::set<int>{0, 1, 2, 3, 4});
  for (std::size_t i = 0; i < a.gesture.size(); ++i) CHECK((a.gesture[i] == 0) == (a.repetition[i] == 0));
  CHECK_THROWS_AS(synth_recording(spec, 5, 6, 1), ValidationError);
  CHECK_THROWS_AS(synth_recording(spec, 4, 0, 1), ValidationError);
}

TEST_CASE("gesture segments carry more energy than rest") {
  const auto rec = synth_recording(small_spec(2), 2, 2, 3);
  double rest = 0.0, active = 0.0;
  Index n_rest = 0, n_active = 0;
  for (Index t = 0; t < rec.timesteps(); ++t) {
    const double e = rec.samples.row(t).squaredNorm();
    if (rec.gesture[static_cast<std::size_t>(t)] == 0) {
      rest += e;
      ++n_rest;
    } else {
      active += e;
      ++n_active;
    }
  }
  CHECK(active / n_active > 10.0 * rest / n_rest);
}

TEST_CASE("split by repetition") {
  const auto rec = synth_recording(small_spec(3), 3, 6, 2);
  const auto split = split_by_repetition(rec, 5, 3);
  const Index total = split.train.timesteps() + split.val.timesteps() + split.test.timesteps();
  CHECK(total == rec.timesteps());

  const auto reps_of = [](const Recording& r) {
    std::set<int> s(r.repetition.begin(), r.repetition.end());
    s.erase(0);
    return s;
  };
  CHECK(reps_of(split.test) == std::set<int>{5});
  CHECK(reps_of(split.val) == std::set<int>{3});
  CHECK(reps_of(split.train) == std::set<int>{1, 2, 4, 6});
  // every split starts with a repetition and rest follows its repetition
  CHECK(split.test.repetition.front() == 5);
  CHECK(split.test.gesture.back() == 0);
  // one join per gesture change inside a single-repetition split
  CHECK(split.test.breaks.size() == 2);
  CHECK(split.train.breaks.size() == 3 * 2);  // reps 3 and 5 cut out of each gesture

  CHECK_THROWS_AS(split_by_repetition(rec, 5, 5), ValidationError);
  CHECK_THROWS_AS(split_by_repetition(rec, 7, 3), ValidationError);
}

TEST_CASE("leading rest goes with the first repetition") {
  const auto rec = parse(
      "ch0,gesture,repetition\n"
      "0,0,0\n0,0,0\n1,1,1\n1,1,1\n0,0,0\n2,1,2\n0,0,0\n");
  const auto split = split_by_repetition(rec, 2, 1);
  CHECK(split.val.timesteps() == 5);
  CHECK(split.test.timesteps() == 2);
  CHECK(split.train.timesteps() == 0);
}

TEST_CASE("slice keeps labels aligned") {
  const auto rec = synth_recording(small_spec(1), 1, 2, 1);
  const auto part = rec.slice(590, 610);
  CHECK(part.timesteps() == 20);
  CHECK(part.gesture.front() == 1);
  CHECK(part.gesture.back() == 0);
  CHECK(part.samples.row(0) == rec.samples.row(590));
}
