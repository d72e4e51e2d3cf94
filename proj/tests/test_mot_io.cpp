#include <algorithm>

#include <gtest/gtest.h>

#include "tem/error.hpp"
#include "tem/mot_io.hpp"
#include "tem/rng.hpp"
#include "test_util.hpp"

using namespace tem;
using tem::testing::obs;
using tem::testing::TempDir;
using tem::testing::write_file;

TEST(ParseMotLine, DetectionRow) {
  const auto o = parse_mot_line("1,-1,10,20,30,40,0.9,-1,-1,-1", SourceKind::kDetection);
  EXPECT_EQ(o.frame, 1);
  EXPECT_FALSE(o.identity.has_value());
  EXPECT_EQ(o.box, (Box{10, 20, 30, 40}));
  EXPECT_DOUBLE_EQ(o.confidence, 0.9);
}

TEST(ParseMotLine, GroundTruthRow) {
  const auto o = parse_mot_line("5,7,0,0,50,100,1,1,1.0", SourceKind::kGroundTruth);
  EXPECT_EQ(o.frame, 5);
  EXPECT_EQ(o.identity, 7);
  EXPECT_EQ(o.box, (Box{0, 0, 50, 100}));
  EXPECT_EQ(o.class_id, 1);
  EXPECT_DOUBLE_EQ(o.visibility, 1.0);
}

TEST(ParseMotLine, RejectsBadRows) {
  EXPECT_THROW(parse_mot_line("3,2,5,5,0,10,1,1,1", SourceKind::kGroundTruth), ParseError);
  EXPECT_THROW(parse_mot_line("3,2,5,5,10,-1,1", SourceKind::kTrack), ParseError);
  EXPECT_THROW(parse_mot_line("0,2,5,5,10,10,1", SourceKind::kTrack), ParseError);
  EXPECT_THROW(parse_mot_line("1,2,5,5,10", SourceKind::kTrack), ParseError);
  EXPECT_THROW(parse_mot_line("1,x,5,5,10,10,1", SourceKind::kTrack), ParseError);
  EXPECT_THROW(parse_mot_line("1,2,5,5,nan,10,1", SourceKind::kTrack), ParseError);
  try {
    parse_mot_line("1,2,5,5,0,10,1", SourceKind::kTrack, 17);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 17u);
  }
}

TEST(ParseMotLine, ClampsConfidenceWithWarning) {
  std::vector<std::string> warnings;
  const auto o = parse_mot_line("1,-1,0,0,5,5,1.7", SourceKind::kDetection, 1, &warnings);
  EXPECT_DOUBLE_EQ(o.confidence, 1.0);
  EXPECT_FALSE(warnings.empty());
}

TEST(MotFile, RoundTripToSixDecimals) {
  TempDir dir;
  Xoshiro256 rng(11);
  std::vector<Observation> rows;
  for (int i = 0; i < 200; ++i) {
    Observation o = obs(1 + i / 10, i, rng.uniform(-50, 500), rng.uniform(-50, 500), rng.uniform(1, 80),
                        rng.uniform(1, 80), rng.uniform());
    rows.push_back(o);
  }
  write_mot_file(rows, dir / "t.txt", SourceKind::kTrack);
  const auto back = read_mot_file(dir / "t.txt", SourceKind::kTrack);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].frame, rows[i].frame);
    EXPECT_EQ(back[i].identity, rows[i].identity);
    EXPECT_NEAR(back[i].box.left, rows[i].box.left, 5e-7);
    EXPECT_NEAR(back[i].box.top, rows[i].box.top, 5e-7);
    EXPECT_NEAR(back[i].box.width, rows[i].box.width, 5e-7);
    EXPECT_NEAR(back[i].box.height, rows[i].box.height, 5e-7);
    EXPECT_NEAR(back[i].confidence, rows[i].confidence, 5e-7);
  }
  // A second round trip is byte-stable.
  write_mot_file(back, dir / "t2.txt", SourceKind::kTrack);
  EXPECT_EQ(tem::testing::read_file(dir / "t.txt"), tem::testing::read_file(dir / "t2.txt"));
}

TEST(MotFile, FormatsPerKind) {
  EXPECT_EQ(format_mot_line(obs(2, std::nullopt, 1.5, 2, 3, 4, 0.25), SourceKind::kDetection),
            "2,-1,1.5,2,3,4,0.25,-1,-1,-1");
  Observation g = obs(3, 9, 0, 0, 10, 20);
  g.class_id = 7;
  g.visibility = 0.5;
  EXPECT_EQ(format_mot_line(g, SourceKind::kGroundTruth), "3,9,0,0,10,20,1,7,0.5");
}

TEST(MotFile, ErrorsNameTheLine) {
  TempDir dir;
  write_file(dir / "bad.txt", "1,1,0,0,10,10,1\n\n2,1,0,0,0,10,1\n");
  try {
    read_mot_file(dir / "bad.txt", SourceKind::kTrack);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("bad.txt"), std::string::npos);
  }
  try {
    read_mot_file(dir / "missing.txt", SourceKind::kTrack);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(Seqinfo, ReadsFields) {
  TempDir dir;
  write_file(dir / "seqinfo.ini", "[Sequence]\nname=MOT17-04\nimDir=img1\nframeRate=30\nseqLength=1050\n"
                                  "imWidth=1920\nimHeight=1080\nimExt=.jpg\n");
  const auto m = read_seqinfo(dir / "seqinfo.ini");
  EXPECT_EQ(m.name, "MOT17-04");
  EXPECT_EQ(m.frame_count, 1050);
  EXPECT_DOUBLE_EQ(m.image_width, 1920);
  EXPECT_DOUBLE_EQ(m.image_height, 1080);
  EXPECT_DOUBLE_EQ(m.frame_rate, 30);
  write_file(dir / "bad.ini", "[Sequence]\nname=x\n");
  EXPECT_THROW(read_seqinfo(dir / "bad.ini"), Error);
}

class BundleFiles : public ::testing::Test {
 protected:
  TempDir dir;
  void write(const std::string& gt, const std::string& det, const std::string& trk, int frames) {
    write_file(dir / "gt.txt", gt);
    write_file(dir / "det.txt", det);
    write_file(dir / "trk.txt", trk);
    write_file(dir / "seqinfo.ini", tem::testing::seqinfo_text(frames));
  }
  EvaluationBundle load() { return load_bundle(dir / "gt.txt", dir / "det.txt", dir / "trk.txt", dir / "seqinfo.ini"); }
};

TEST_F(BundleFiles, IndexesFramesAndKeepsEmptyOnes) {
  write("1,1,0,0,10,10,1,1,1\n3,1,2,0,10,10,1,1,1\n", "1,-1,0,0,10,10,0.9\n", "3,5,2,0,10,10,1\n", 4);
  const auto b = load();
  EXPECT_EQ(b.ground_truth.frame_count(), 4);
  EXPECT_EQ(b.ground_truth.at(1).size(), 1u);
  EXPECT_TRUE(b.ground_truth.at(2).empty());
  EXPECT_TRUE(b.ground_truth.at(4).empty());
  EXPECT_EQ(b.tracks.at(3).size(), 1u);
}

TEST_F(BundleFiles, FrameBeyondSequenceLength) {
  write("1,1,0,0,10,10,1,1,1\n", "5,-1,0,0,10,10,0.9\n", "", 4);
  EXPECT_THROW(load(), Error);
}

TEST_F(BundleFiles, DuplicateIdentityInFrame) {
  write("1,1,0,0,10,10,1,1,1\n1,1,20,0,10,10,1,1,1\n", "", "", 2);
  EXPECT_THROW(load(), Error);
  write("1,1,0,0,10,10,1,1,1\n", "", "1,4,0,0,10,10,1\n1,4,30,0,10,10,1\n", 2);
  EXPECT_THROW(load(), Error);
}

TEST_F(BundleFiles, TracksNeedIdentities) {
  write("1,1,0,0,10,10,1,1,1\n", "", "1,-1,0,0,10,10,1\n", 1);
  EXPECT_THROW(load(), Error);
}

TEST_F(BundleFiles, ExplicitMetaOverload) {
  write("2,1,0,0,10,10,1,1,1\n", "", "", 2);
  SequenceMeta meta;
  meta.frame_count = 3;
  const auto b = load_bundle(dir / "gt.txt", dir / "det.txt", dir / "trk.txt", meta);
  EXPECT_EQ(b.tracks.frame_count(), 3);
}

TEST_F(BundleFiles, RowOrderDoesNotMatter) {
  Xoshiro256 rng(5);
  std::vector<std::string> lines;
  for (int k = 1; k <= 6; ++k) {
    for (int id = 1; id <= 4; ++id) {
      lines.push_back(format_mot_line(obs(k, id, rng.uniform(0, 200), rng.uniform(0, 200), 20, 30),
                                      SourceKind::kGroundTruth));
    }
  }
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& l : v) s += l + "\n";
    return s;
  };
  write(join(lines), "", "", 6);
  auto a = load();
  std::reverse(lines.begin(), lines.end());
  std::swap(lines[3], lines[11]);
  write(join(lines), "", "", 6);
  auto b = load();
  a.ground_truth.canonicalize();
  b.ground_truth.canonicalize();
  EXPECT_EQ(a.ground_truth, b.ground_truth);
}

TEST(GroundTruthFilter, ClassFilter) {
  FrameSeries gt(1);
  for (int c : {1, 1, 7}) {
    Observation o = obs(1, static_cast<int>(gt.at(1).size()) + 1, 0, 0, 10, 10);
    o.class_id = c;
    gt.at(1).push_back(o);
  }
  EXPECT_EQ(filter_ground_truth(gt, GroundTruthFilter{}).at(1).size(), 2u);
  GroundTruthFilter all;
  all.allowed_classes.clear();
  EXPECT_EQ(filter_ground_truth(gt, all).at(1).size(), 3u);
}

TEST(GroundTruthFilter, VisibilityAndFlag) {
  FrameSeries gt(1);
  Observation a = obs(1, 1, 0, 0, 10, 10);
  a.visibility = 0.0;
  Observation b = obs(1, 2, 0, 0, 10, 10, 0.0);  // flag column 0
  gt.at(1) = {a, b};
  GroundTruthFilter f;
  f.min_visibility = 0.0;
  f.require_flag = false;
  EXPECT_EQ(filter_ground_truth(gt, f), gt);
  f.require_flag = true;
  const auto out = filter_ground_truth(gt, f);
  ASSERT_EQ(out.at(1).size(), 1u);
  EXPECT_EQ(out.at(1)[0].identity, 1);
  EXPECT_EQ(filter_ground_truth(out, f), out);
}
