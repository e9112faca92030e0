#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "lltrack/imgproc.hpp"
#include "test_support.hpp"

using namespace lltrack;
using namespace lltrack::imgproc;

namespace {

ImageBuffer ramp_image(int h, int w) {
    ImageBuffer img(h, w, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(y, x, 0) = x / double(w);
            img.at(y, x, 1) = y / double(h);
            img.at(y, x, 2) = ((x * 7 + y * 13) % 17) / 17.0;
        }
    }
    return img;
}

}  // namespace

TEST(PatchRect, PaddingTwoDoublesTheBoxAboutItsCenter) {
    const BoundingBox r = patch_rect({75, 80, 50, 40}, 2.0);
    EXPECT_DOUBLE_EQ(r.w, 100.0);
    EXPECT_DOUBLE_EQ(r.h, 80.0);
    EXPECT_DOUBLE_EQ(r.cx(), 100.0);
    EXPECT_DOUBLE_EQ(r.cy(), 100.0);
    EXPECT_DOUBLE_EQ(r.x, 50.0);
    EXPECT_DOUBLE_EQ(r.y, 60.0);
}

TEST(ExtractPatch, PaddingOneAtBoxSizeIsTheCropItself) {
    const ImageBuffer img = ramp_image(200, 200);
    const BoundingBox bb{75, 80, 50, 40};
    const ImageBuffer p = extract_patch(img, bb, 1.0, 50, 40);
    ASSERT_EQ(p.width, 50);
    ASSERT_EQ(p.height, 40);
    for (int y = 0; y < 40; ++y) {
        for (int x = 0; x < 50; ++x) {
            for (int c = 0; c < 3; ++c) ASSERT_DOUBLE_EQ(p.at(y, x, c), img.at(80 + y, 75 + x, c));
        }
    }
}

TEST(ExtractPatch, PaddedCropMatchesDirectCropWhenResolutionKept) {
    const ImageBuffer img = ramp_image(200, 200);
    const ImageBuffer p = extract_patch(img, {75, 80, 50, 40}, 2.0, 100, 80);
    for (int y = 0; y < 80; ++y) {
        for (int x = 0; x < 100; ++x) ASSERT_DOUBLE_EQ(p.at(y, x, 1), img.at(60 + y, 50 + x, 1));
    }
}

TEST(ExtractPatch, BoxOutsideImageReplicatesCornerPixel) {
    ImageBuffer img = ramp_image(30, 40);
    const ImageBuffer p = extract_patch(img, {500, 400, 20, 10}, 2.0, 16, 12);
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            for (int c = 0; c < 3; ++c) ASSERT_NEAR(p.at(y, x, c), img.at(29, 39, c), 1e-12);
        }
    }
    const ImageBuffer q = extract_patch(img, {-300, -200, 20, 10}, 1.0, 8, 8);
    EXPECT_NEAR(q.at(3, 3, 2), img.at(0, 0, 2), 1e-12);
}

TEST(ExtractPatch, OutputSizeIndependentOfBoxPosition) {
    const ImageBuffer img = ramp_image(60, 80);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> pos(-100.0, 200.0);
    for (int i = 0; i < 20; ++i) {
        const ImageBuffer p = extract_patch(img, {pos(rng), pos(rng), 17.3, 9.1}, 2.0, 24, 20);
        EXPECT_EQ(p.width, 24);
        EXPECT_EQ(p.height, 20);
        EXPECT_EQ(p.data.size(), 24u * 20u * 3u);
    }
}

TEST(ExtractPatch, RejectsPaddingBelowOne) {
    const ImageBuffer img(10, 10, 1);
    EXPECT_THROW(extract_patch(img, {1, 1, 4, 4}, 0.5, 4, 4), std::invalid_argument);
    EXPECT_THROW(extract_patch(img, {1, 1, 4, 4}, 1.0, 0, 4), std::invalid_argument);
}

TEST(Resample, HalvingAveragesTwoByTwoBlocks) {
    std::mt19937 rng(5);
    const ImageBuffer img = testutil::random_image(rng, 16, 20, 1);
    const ImageBuffer p = resample(img, {0, 0, 20, 16}, 10, 8);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 10; ++x) {
            const double avg = (img.at(2 * y, 2 * x) + img.at(2 * y, 2 * x + 1) + img.at(2 * y + 1, 2 * x) +
                                img.at(2 * y + 1, 2 * x + 1)) / 4.0;
            ASSERT_NEAR(p.at(y, x), avg, 1e-12);
        }
    }
}

TEST(Resample, ConstantImageStaysConstant) {
    const ImageBuffer img(20, 30, 3, 0.37);
    const ImageBuffer p = resample(img, {-5.3, 2.7, 41.9, 13.2}, 17, 23);
    for (double v : p.data) ASSERT_NEAR(v, 0.37, 1e-12);
}

TEST(MeanLuminance, BlackWhiteAndHalf) {
    EXPECT_DOUBLE_EQ(mean_luminance(ImageBuffer(8, 8, 3, 0.0)), 0.0);
    EXPECT_NEAR(mean_luminance(ImageBuffer(8, 8, 3, 1.0)), 255.0, 1e-9);
    ImageBuffer half(8, 8, 3, 0.0);
    for (int y = 0; y < 8; ++y) {
        for (int x = 4; x < 8; ++x) {
            for (int c = 0; c < 3; ++c) half.at(y, x, c) = 1.0;
        }
    }
    EXPECT_NEAR(mean_luminance(half), 127.5, 1e-9);
}

TEST(MeanLuminance, UsesBt601WeightsAndClipsTheBox) {
    ImageBuffer img(4, 4, 3, 0.0);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) img.at(y, x, 0) = 1.0;
    }
    EXPECT_NEAR(mean_luminance(img, BoundingBox{-10, -10, 100, 100}), 255.0 * 0.299, 1e-9);
    // empty intersection falls back to the whole image
    EXPECT_NEAR(mean_luminance(img, BoundingBox{50, 50, 5, 5}), 255.0 * 0.299, 1e-9);
}

TEST(MeanLuminance, InvariantToPixelPermutation) {
    std::mt19937 rng(11);
    ImageBuffer img = testutil::random_image(rng, 12, 12);
    const double before = mean_luminance(img);
    std::vector<int> order(144);
    for (int i = 0; i < 144; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    ImageBuffer shuffled(12, 12, 3);
    for (int i = 0; i < 144; ++i) {
        for (int c = 0; c < 3; ++c) shuffled.data[i * 3 + c] = img.data[order[i] * 3 + c];
    }
    EXPECT_NEAR(mean_luminance(shuffled), before, 1e-9);
}

TEST(CosineWindow, CornersZeroCenterOneSymmetric) {
    const FeatureMap w = cosine_window(5, 7);
    EXPECT_DOUBLE_EQ(w.at(0, 0, 0), 0.0);
    EXPECT_DOUBLE_EQ(w.at(0, 4, 6), 0.0);
    EXPECT_NEAR(w.at(0, 2, 3), 1.0, 1e-15);
    const FeatureMap s = cosine_window(4, 4);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            EXPECT_NEAR(s.at(0, r, c), s.at(0, 3 - r, c), 1e-15);
            EXPECT_NEAR(s.at(0, r, c), s.at(0, r, 3 - c), 1e-15);
            EXPECT_GE(s.at(0, r, c), 0.0);
            EXPECT_LE(s.at(0, r, c), 1.0);
        }
    }
}

TEST(Quantization, EightBitRoundTripIsIdentity) {
    for (int v = 0; v < 256; ++v) EXPECT_EQ(to_u8(from_u8(static_cast<std::uint8_t>(v))), v);
}

TEST(ImageIo, PngRoundTripPreservesEightBitValues) {
    const auto dir = testutil::scratch_dir("imgio");
    std::mt19937 rng(2);
    const ImageBuffer img = quantize_8bit(testutil::random_image(rng, 9, 13));
    save_image(dir / "a.png", img);
    const ImageBuffer back = load_image(dir / "a.png");
    ASSERT_EQ(back.channels, 3);
    EXPECT_LT(testutil::max_abs_diff(back.data, img.data), 1e-12);
}

TEST(ParseBox, CommaTabAndSpaceSeparators) {
    EXPECT_EQ(parse_box("198,214,34,81"), (BoundingBox{198, 214, 34, 81}));
    EXPECT_EQ(parse_box("198\t214\t34\t81"), (BoundingBox{198, 214, 34, 81}));
    EXPECT_EQ(parse_box("1.5 2 3 4"), (BoundingBox{1.5, 2, 3, 4}));
    EXPECT_ANY_THROW(parse_box("1,2,3"));
}

TEST(LoadSequence, NumericOrderAndOneBasedGroundTruth) {
    const auto dir = testutil::scratch_dir("seq3");
    std::filesystem::create_directories(dir / "img");
    const ImageBuffer frame(8, 8, 3, 0.5);
    for (const char* n : {"0003.png", "0001.png", "0002.png"}) save_image(dir / "img" / n, frame);
    std::ofstream(dir / "groundtruth_rect.txt") << "198,214,34,81\n1,1,2,2\n3,3,4,4\n";

    const SequenceHandle seq = load_sequence(dir);
    ASSERT_EQ(seq.size(), 3u);
    EXPECT_EQ(seq.frame_paths[0].filename(), "0001.png");
    EXPECT_EQ(seq.frame_paths[2].filename(), "0003.png");
    ASSERT_TRUE(seq.ground_truth);
    EXPECT_EQ((*seq.ground_truth)[0], (BoundingBox{197, 213, 34, 81}));

    const SequenceHandle raw = load_sequence(dir, false);
    EXPECT_EQ((*raw.ground_truth)[0], (BoundingBox{198, 214, 34, 81}));
}

TEST(LoadSequence, MismatchedGroundTruthTruncates) {
    const auto dir = testutil::scratch_dir("seqtrunc");
    std::filesystem::create_directories(dir / "img");
    for (const char* n : {"1.png", "2.png", "3.png"}) save_image(dir / "img" / n, ImageBuffer(4, 4, 1));
    std::ofstream(dir / "groundtruth_rect.txt") << "1,1,2,2\n1,1,2,2\n";
    const SequenceHandle seq = load_sequence(dir);
    EXPECT_EQ(seq.size(), 2u);
    EXPECT_EQ(seq.ground_truth->size(), 2u);
}

TEST(LoadSequence, EmptyImageDirectoryIsAnError) {
    const auto dir = testutil::scratch_dir("seqempty");
    std::filesystem::create_directories(dir / "img");
    try {
        load_sequence(dir);
        FAIL() << "expected an error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("zero frames"), std::string::npos);
    }
    EXPECT_THROW(load_sequence(dir / "missing"), std::runtime_error);
}
