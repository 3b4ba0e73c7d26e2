#include "support/doctest.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <opencv2/imgproc.hpp>

#include "fgb/csv.hpp"
#include "fgb/data/ingest.hpp"
#include "fgb/data/pipeline.hpp"
#include "fgb/data/retina.hpp"
#include "fgb/data/splits.hpp"
#include "fgb/data/toy.hpp"
#include "fgb/error.hpp"
#include "fgb/image.hpp"
#include "support/temp_dir.hpp"

using namespace fgb;
using namespace fgb::data;
using fgb::testing::TempDir;
namespace fs = std::filesystem;

namespace {

void tiny_png(const fs::path& p) { image::write_png(p, cv::Mat(8, 8, CV_8UC3, cv::Scalar(10, 20, 30))); }

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected fgb::Error");
    return ErrorCode::Io;
}

DatasetManifest synthetic_manifest(SourceDataset src, int amd, int non_amd, const std::string& tag) {
    DatasetManifest m;
    for (int i = 0; i < amd + non_amd; ++i) {
        ImageRecord r;
        r.id = tag + "/" + std::to_string(i);
        r.source_dataset = src;
        r.path = "/nonexistent/" + r.id;
        r.label = i < amd ? Label::Amd : Label::NonAmd;
        r.grade = Grade::Good;
        m.records.push_back(r);
    }
    m.recount();
    return m;
}

}  // namespace

TEST_CASE("ingest: empty directory yields an empty manifest") {
    TempDir dir;
    for (auto ds : {SourceDataset::IChallengeAmd, SourceDataset::Odir2019, SourceDataset::Riadd}) {
        const auto res = ingest_dataset(dir.path(), ds, {});
        CHECK(res.manifest.records.empty());
        CHECK(res.manifest.counts.total() == 0);
    }
}

TEST_CASE("ingest: grades pass through verbatim") {
    TempDir dir;
    tiny_png(dir / "AMD/A0001.png");
    tiny_png(dir / "AMD/A0002.png");
    tiny_png(dir / "Non-AMD/N0001.png");
    GradeTable grades;
    grades.grades["ICHALLENGE_AMD/A0001"] = Grade::Good;
    grades.grades["ICHALLENGE_AMD/A0002"] = Grade::Usable;
    grades.grades["ICHALLENGE_AMD/N0001"] = Grade::Reject;
    const auto m = ingest_dataset(dir.path(), SourceDataset::IChallengeAmd, grades).manifest;
    REQUIRE(m.records.size() == 3);
    CHECK(m.records[0].grade == Grade::Good);
    CHECK(m.records[1].grade == Grade::Usable);
    CHECK(m.records[2].grade == Grade::Reject);
    CHECK(m.records[2].label == Label::NonAmd);
    for (const auto& r : m.records) CHECK(r.split == Split::Unassigned);
}

TEST_CASE("ingest: unknown iChallenge folder is a hard error naming the file") {
    TempDir dir;
    tiny_png(dir / "Mystery/X1.png");
    try {
        ingest_dataset(dir.path(), SourceDataset::IChallengeAmd, {});
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ManifestError);
        CHECK(std::string(e.what()).find("X1.png") != std::string::npos);
    }
}

TEST_CASE("ingest: RIADD labels, missing files warn, bad keys name the row") {
    TempDir dir;
    tiny_png(dir / "Training/1.png");
    tiny_png(dir / "Training/2.png");
    csv::write(dir / "RFMiD_Training_Labels.csv", {"ID", "Disease_Risk", "DR", "ARMD"},
               {{"1", "1", "0", "1"}, {"2", "0", "0", "0"}, {"3", "1", "0", "1"}});
    GradeTable grades;
    grades.grades["RIADD/1"] = Grade::Good;
    grades.grades["RIADD/2"] = Grade::Good;
    const auto res = ingest_dataset(dir.path(), SourceDataset::Riadd, grades);
    REQUIRE(res.manifest.records.size() == 2);
    CHECK(res.manifest.records[0].label == Label::Amd);
    CHECK(res.manifest.records[1].label == Label::NonAmd);
    REQUIRE(res.warnings.size() == 1);
    CHECK(res.warnings[0].find("3.png") != std::string::npos);

    csv::write(dir / "RFMiD_Training_Labels.csv", {"ID", "ARMD"}, {{"1", "1"}, {"2", "maybe"}});
    try {
        ingest_dataset(dir.path(), SourceDataset::Riadd, grades);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ManifestError);
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
}

TEST_CASE("ingest: ODIR disease letters") {
    TempDir dir;
    tiny_png(dir / "preprocessed_images/0_left.jpg.png");
    tiny_png(dir / "preprocessed_images/0_right.png");
    csv::write(dir / "full_df.csv", {"ID", "filename", "labels"},
               {{"0", "0_left.jpg.png", "['A']"}, {"0", "0_right.png", "['N']"}});
    GradeTable grades;
    grades.grades["ODIR_2019/0_left.jpg"] = Grade::Good;
    grades.grades["ODIR_2019/0_right"] = Grade::Usable;
    const auto m = ingest_dataset(dir.path(), SourceDataset::Odir2019, grades).manifest;
    REQUIRE(m.records.size() == 2);
    CHECK(m.records[0].label == Label::Amd);
    CHECK(m.records[1].label == Label::NonAmd);

    csv::write(dir / "full_df.csv", {"ID", "filename", "labels"}, {{"0", "0_left.jpg.png", "['Z']"}});
    CHECK(code_of([&] { ingest_dataset(dir.path(), SourceDataset::Odir2019, grades); }) == ErrorCode::ManifestError);
}

TEST_CASE("ingest: missing grade entry is rejected") {
    TempDir dir;
    tiny_png(dir / "AMD/A0001.png");
    CHECK(code_of([&] { ingest_dataset(dir.path(), SourceDataset::IChallengeAmd, {}); }) == ErrorCode::ManifestError);
}

TEST_CASE("manifest: CSV + sidecar round trip and byte-identical rewrite") {
    TempDir dir;
    auto m = synthetic_manifest(SourceDataset::Riadd, 3, 4, "RIADD");
    m.records[1].split = Split::Test;
    m.records[2].path = "with,comma/and \"quote\".png";
    m.seed = 99;
    m.recount();
    m.write(dir / "m.csv");
    const auto back = DatasetManifest::read(dir / "m.csv");
    CHECK((back.records == m.records));
    CHECK(back.seed == 99);
    CHECK(back.counts == m.counts);
    CHECK(back.to_csv() == m.to_csv());
    CHECK(back.sidecar_json() == m.sidecar_json());
}

TEST_CASE("manifest: validation invariants") {
    auto m = synthetic_manifest(SourceDataset::Riadd, 2, 2, "R");
    m.validate(false);
    m.records[0].grade = Grade::Reject;
    m.records[0].split = Split::Train;
    m.recount();
    CHECK(code_of([&] { m.validate(false); }) == ErrorCode::ManifestError);
    m.records[0].split = Split::Unassigned;
    m.recount();
    m.validate(false);
    m.counts.at(Label::Amd, Split::Train) = 5;
    CHECK(code_of([&] { m.validate(false); }) == ErrorCode::ManifestError);
    m.recount();
    m.records[1].id = m.records[0].id;
    CHECK(code_of([&] { m.validate(false); }) == ErrorCode::ManifestError);
    CHECK(code_of([&] { synthetic_manifest(SourceDataset::Riadd, 1, 0, "R").validate(true); }) ==
          ErrorCode::ManifestError);
}

TEST_CASE("filter_by_grade: identity, empty, idempotence") {
    auto m = synthetic_manifest(SourceDataset::Odir2019, 5, 5, "O");
    CHECK((filter_by_grade(m).records == m.records));
    for (auto& r : m.records) r.grade = Grade::Reject;
    CHECK(filter_by_grade(m).records.empty());

    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        auto x = synthetic_manifest(SourceDataset::Odir2019, 1 + static_cast<int>(rng.index(20)),
                                    1 + static_cast<int>(rng.index(20)), "T");
        for (auto& r : x.records) r.grade = static_cast<Grade>(rng.index(3));
        x.recount();
        const auto once = filter_by_grade(x);
        const auto twice = filter_by_grade(once);
        CHECK((twice.records == once.records));
        CHECK(twice.counts == once.counts);
        once.validate(false);
    }
}

TEST_CASE("build_splits: arithmetic, determinism, disjointness") {
    const auto m = synthetic_manifest(SourceDataset::IChallengeAmd, 10, 10, "I");
    const std::vector<DatasetManifest> in{m};
    const auto a = build_splits(in, 5, {.test_per_class = 2});
    CHECK(a.counts.at(Label::Amd, Split::Train) == 8);
    CHECK(a.counts.at(Label::NonAmd, Split::Train) == 8);
    CHECK(a.counts.at(Label::Amd, Split::Test) == 2);
    CHECK(a.counts.at(Label::NonAmd, Split::Test) == 2);
    const auto b = build_splits(in, 5, {.test_per_class = 2});
    CHECK(a.to_csv() == b.to_csv());
    const auto c = build_splits(in, 6, {.test_per_class = 2});
    CHECK(c.counts == a.counts);

    // Input order does not matter.
    auto reversed = m;
    std::reverse(reversed.records.begin(), reversed.records.end());
    const std::vector<DatasetManifest> rin{reversed};
    CHECK(build_splits(rin, 5, {.test_per_class = 2}).to_csv() == a.to_csv());

    CHECK(code_of([&] { build_splits(in, 5, {.test_per_class = 11}); }) == ErrorCode::InsufficientMinorityClass);
}

TEST_CASE("build_splits: REJECT records never reach TRAIN or TEST") {
    auto m = synthetic_manifest(SourceDataset::Riadd, 6, 6, "R");
    m.records[0].grade = Grade::Reject;
    m.records[7].grade = Grade::Reject;
    m.recount();
    const std::vector<DatasetManifest> in{m};
    const auto s = build_splits(in, 1, {.test_per_class = 3});
    CHECK(s.records.size() == 10);
    for (const auto& r : s.records) CHECK(r.grade != Grade::Reject);
    s.validate(false);
}

TEST_CASE("build_splits: quota is spread over sources proportionally") {
    const std::vector<DatasetManifest> in{synthetic_manifest(SourceDataset::IChallengeAmd, 30, 30, "I"),
                                          synthetic_manifest(SourceDataset::Odir2019, 60, 90, "O"),
                                          synthetic_manifest(SourceDataset::Riadd, 10, 0, "R")};
    const auto s = build_splits(in, 11, {.test_per_class = 20});
    std::map<std::pair<SourceDataset, Label>, int> test;
    for (const auto& r : s.records) {
        if (r.split == Split::Test) ++test[{r.source_dataset, r.label}];
    }
    CHECK(test[{SourceDataset::IChallengeAmd, Label::Amd}] == 6);
    CHECK(test[{SourceDataset::Odir2019, Label::Amd}] == 12);
    CHECK(test[{SourceDataset::Riadd, Label::Amd}] == 2);
    CHECK(test[{SourceDataset::IChallengeAmd, Label::NonAmd}] == 5);
    CHECK(test[{SourceDataset::Odir2019, Label::NonAmd}] == 15);
}

TEST_CASE("detect_retina_circle: rendered disks") {
    SUBCASE("centered") {
        const auto img = render_disk(224, 224, 112, 112, 100);
        const auto c = detect_retina_circle(img);
        CHECK(std::abs(c.cx - 112) <= 2.0);
        CHECK(std::abs(c.cy - 112) <= 2.0);
        CHECK(std::abs(c.r - 100) <= 2.0);
    }
    SUBCASE("off-center") {
        const auto img = render_disk(224, 224, 80, 140, 60);
        const auto c = detect_retina_circle(img);
        CHECK(std::abs(c.cx - 80) <= 2.0);
        CHECK(std::abs(c.cy - 140) <= 2.0);
        CHECK(std::abs(c.r - 60) <= 2.0);
    }
    SUBCASE("large image is detected on a downscaled copy") {
        const auto img = render_disk(900, 700, 460, 350, 330);
        const auto c = detect_retina_circle(img);
        CHECK(std::abs(c.cx - 460) <= 4.0);
        CHECK(std::abs(c.cy - 350) <= 4.0);
        CHECK(std::abs(c.r - 330) <= 4.0);
    }
    SUBCASE("featureless input") {
        const cv::Mat black = cv::Mat::zeros(224, 224, CV_8UC1);
        CHECK(code_of([&] { detect_retina_circle(black); }) == ErrorCode::NoCircleFound);
    }
    SUBCASE("preconditions") {
        CHECK(code_of([&] { detect_retina_circle(cv::Mat::zeros(32, 200, CV_8UC1)); }) == ErrorCode::UsageError);
        CHECK(code_of([&] { detect_retina_circle(cv::Mat::zeros(100, 100, CV_8UC3)); }) == ErrorCode::UsageError);
    }
}

TEST_CASE("crop_and_resize: shape and range contracts for any input size") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 64 + static_cast<int>(rng.index(500));
        const int h = 64 + static_cast<int>(rng.index(500));
        cv::Mat img(h, w, CV_8UC3);
        cv::randu(img, 0, 256);
        RetinaCircle c{rng.uniform(0, w - 1), rng.uniform(0, h - 1), rng.uniform(4.5, std::max(w, h))};
        const auto gan = crop_and_resize(img, c, CropTarget::Gan256);
        CHECK(gan.rows == 256);
        CHECK(gan.cols == 256);
        CHECK(gan.type() == CV_8UC3);
        const auto clf = crop_and_resize(img, c, CropTarget::Clf224);
        CHECK(clf.rows == 224);
        CHECK(clf.cols == 224);
        CHECK(clf.type() == CV_32FC3);
        double lo, hi;
        cv::minMaxLoc(clf.reshape(1), &lo, &hi);
        CHECK(lo >= -1.0);
        CHECK(hi <= 1.0);
    }
}

TEST_CASE("crop_and_resize: mid-gray disk maps to exactly zero") {
    cv::Mat disk = render_disk(300, 300, 150, 150, 120);
    cv::Mat gray_disk;
    disk.convertTo(gray_disk, CV_32F, 127.5 / 255.0);
    cv::Mat color;
    cv::cvtColor(gray_disk, color, cv::COLOR_GRAY2BGR);
    // The central crop lies inside the disk, so every output value is 0.
    const auto out = crop_and_resize(color, {150, 150, 120}, CropTarget::Clf224);
    double lo, hi;
    cv::minMaxLoc(out.reshape(1), &lo, &hi);
    CHECK(lo == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(hi == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("crop_and_resize: degenerate and invalid circles") {
    cv::Mat img(100, 100, CV_8UC3, cv::Scalar::all(50));
    CHECK(code_of([&] { crop_and_resize(img, {50, 50, 3}, CropTarget::Gan256); }) == ErrorCode::DegenerateCrop);
    CHECK(code_of([&] { crop_and_resize(img, {150, 50, 30}, CropTarget::Gan256); }) == ErrorCode::UsageError);
}

TEST_CASE("preprocess_manifest: detects, crops, writes 256 px images") {
    TempDir dir;
    DatasetManifest m;
    for (int i = 0; i < 3; ++i) {
        const auto p = dir / ("raw/img" + std::to_string(i) + ".png");
        cv::Mat disk = render_disk(320, 280, 160 + 5 * i, 140, 120, 3, cv::Scalar(40, 80, 200));
        image::write_png(p, disk);
        ImageRecord r;
        r.id = "RIADD/img" + std::to_string(i);
        r.source_dataset = SourceDataset::Riadd;
        r.path = p;
        r.label = Label::NonAmd;
        m.records.push_back(r);
    }
    image::write_png(dir / "raw/black.png", cv::Mat::zeros(200, 200, CV_8UC3));
    m.records.push_back({"RIADD/black", SourceDataset::Riadd, dir / "raw/black.png", Label::Amd, Grade::Good,
                         Split::Unassigned, std::nullopt});
    m.recount();
    const auto res = preprocess_manifest(m, dir / "out");
    CHECK(res.manifest.records.size() == 3);
    CHECK(res.warnings.size() == 1);
    for (const auto& r : res.manifest.records) {
        const auto img = image::read(r.path);
        CHECK(img.rows == 256);
        CHECK(img.cols == 256);
        REQUIRE(r.circle.has_value());
        CHECK(std::abs(r.circle->r - 120) <= 2.0);
    }
}

TEST_CASE("toy dataset: labels file is ingestible") {
    TempDir dir;
    const auto m = make_toy_dataset(dir.path(), {.count = 20, .size = 32, .test_per_class = 2, .seed = 4});
    CHECK(m.records.size() == 20);
    CHECK(m.counts.split_total(Split::Test) == 4);
    GradeTable grades;
    for (const auto& r : m.records) grades.grades[r.id] = Grade::Good;
    const auto ingested = ingest_dataset(dir.path(), SourceDataset::Toy, grades).manifest;
    REQUIRE(ingested.records.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(ingested.records[i].id == m.records[i].id);
        CHECK(ingested.records[i].label == m.records[i].label);
    }
}

TEST_CASE("ingest + filter: iChallenge-sized training folder") {
    TempDir dir;
    GradeTable grades;
    for (int i = 0; i < 400; ++i) {
        const bool amd = i < 89;
        const std::string stem = (amd ? "A" : "N") + std::to_string(1000 + i);
        tiny_png(dir / ((amd ? "Training400/AMD/" : "Training400/Non-AMD/") + stem + ".jpg"));
        // 15 of the AMD images are graded unusable.
        grades.grades["ICHALLENGE_AMD/" + stem] = amd && i % 6 == 0 && i < 90 ? Grade::Reject : Grade::Good;
    }
    const auto m = ingest_dataset(dir.path(), SourceDataset::IChallengeAmd, grades).manifest;
    CHECK(m.records.size() == 400);
    CHECK(m.counts.label_total(Label::Amd) == 89);
    CHECK(m.counts.label_total(Label::NonAmd) == 311);

    DatasetManifest amd_only;
    for (const auto& r : m.records) {
        if (r.label == Label::Amd) amd_only.records.push_back(r);
    }
    amd_only.recount();
    CHECK(amd_only.records.size() == 89);
    CHECK(filter_by_grade(amd_only).records.size() == 74);
}

TEST_CASE("build_splits: 105 + 105 over three sources, disjoint") {
    const std::vector<DatasetManifest> in{synthetic_manifest(SourceDataset::IChallengeAmd, 74, 290, "I"),
                                          synthetic_manifest(SourceDataset::Odir2019, 170, 4993, "O"),
                                          synthetic_manifest(SourceDataset::Riadd, 136, 1143, "R")};
    const auto s = build_splits(in, 2022);
    CHECK(s.counts.at(Label::Amd, Split::Test) == 105);
    CHECK(s.counts.at(Label::NonAmd, Split::Test) == 105);
    CHECK(s.counts.split_total(Split::Unassigned) == 0);
    std::set<std::string> train, test;
    for (const auto& r : s.records) (r.split == Split::Test ? test : train).insert(r.id);
    CHECK(test.size() == 210);
    for (const auto& id : test) CHECK(train.count(id) == 0);
    s.validate(false);
}

TEST_CASE("detect_retina_circle: 100 randomized disks within 2 px") {
    Rng rng(20220812);
    int done = 0;
    int worst_trial = -1;
    double worst = 0.0;
    while (done < 100) {
        const int w = 160 + static_cast<int>(rng.index(240));
        const int h = 160 + static_cast<int>(rng.index(240));
        const int side = std::min(w, h);
        const double r = rng.uniform(0.27 * side, 0.58 * side);
        const double cx = rng.uniform(0.5 * r, w - 0.5 * r);
        const double cy = rng.uniform(0.5 * r, h - 0.5 * r);
        // Skip layouts where most of the rim falls outside the frame.
        int visible = 0;
        for (int a = 0; a < 360; ++a) {
            const double x = cx + r * std::cos(a * M_PI / 180.0);
            const double y = cy + r * std::sin(a * M_PI / 180.0);
            if (x > 2 && y > 2 && x < w - 3 && y < h - 3) ++visible;
        }
        if (visible < 200) continue;
        const auto c = detect_retina_circle(render_disk(w, h, cx, cy, r));
        const double err = std::max({std::abs(c.cx - cx), std::abs(c.cy - cy), std::abs(c.r - r)});
        if (err > worst) {
            worst = err;
            worst_trial = done;
        }
        ++done;
    }
    INFO("worst trial " << worst_trial);
    CHECK(worst <= 2.0);
}
