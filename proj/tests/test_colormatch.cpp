#include "doctest.h"

#include <cmath>
#include <vector>

#include "texflow/colormatch.hpp"
#include "texflow/image.hpp"
#include "texflow/rng.hpp"

#include "oracles.hpp"

using namespace texflow;

namespace {

std::vector<double> random_samples(int n, uint64_t seed, double lo = 0.0, double hi = 1.0) {
    Rng rng(seed);
    std::vector<double> out(static_cast<size_t>(n) * 3);
    for (double& v : out) v = rng.uniform(lo, hi);
    return out;
}

ImageGrid image_from(const std::vector<double>& rgb, int w, int h) {
    ImageGrid img(w, h, 3, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.pixel(x, y)[c] = rgb[(static_cast<size_t>(y) * w + x) * 3 + c];
    return img;
}

} // namespace

TEST_CASE("matching a distribution to itself is the identity") {
    std::vector<double> s = random_samples(400, 311);
    ColorTransform t = solve_color_match(s, s);
    for (int r = 0; r < 3; ++r) {
        CHECK(t.mu_c[r] == t.mu_s[r]);
        for (int c = 0; c < 3; ++c)
            CHECK(t.A[r][c] == doctest::Approx(r == c ? 1.0 : 0.0).epsilon(1e-6));
    }

    ImageGrid img = image_from(s, 20, 20);
    ImageGrid out = apply_color_match(img, MaskGrid(20, 20, true), t, false);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(out.pixel(x, y)[c] == doctest::Approx(img.pixel(x, y)[c]).epsilon(1e-6));
}

TEST_CASE("transform application matches the affine form") {
    ColorTransform t;
    double a[3][3] = {{2.0, 0.5, 0.0}, {-1.0, 1.0, 0.25}, {0.0, 0.0, 3.0}};
    for (int r = 0; r < 3; ++r) {
        t.mu_c[r] = 0.1 * (r + 1);
        t.mu_s[r] = 0.5 - 0.1 * r;
        for (int c = 0; c < 3; ++c) t.A[r][c] = a[r][c];
    }
    double in[3] = {0.8, 0.3, 0.6}, out[3];
    t.apply(in, out);
    for (int r = 0; r < 3; ++r) {
        double want = t.mu_s[r];
        for (int c = 0; c < 3; ++c) want += a[r][c] * (in[c] - t.mu_c[c]);
        CHECK(out[r] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("transformed content matches the style's first and second moments") {
    for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        std::vector<double> content = random_samples(600, seed * 10 + 1, 0.2, 0.9);
        std::vector<double> style = random_samples(500, seed * 10 + 2, 0.0, 0.6);
        ColorTransform t = solve_color_match(content, style);

        ImageGrid img = image_from(content, 30, 20);
        // unclamped: the moment identity holds before any gamut snapping
        ImageGrid out = apply_color_match(img, MaskGrid(30, 20, true), t, false);

        testsupport::Moments3 got = testsupport::oracle_moments(gather_pixels(out, nullptr));
        testsupport::Moments3 want = testsupport::oracle_moments(style);
        for (int r = 0; r < 3; ++r) {
            CHECK(got.mean[r] == doctest::Approx(want.mean[r]).epsilon(1e-6));
            for (int c = 0; c < 3; ++c)
                CHECK(got.cov[r][c] == doctest::Approx(want.cov[r][c]).epsilon(1e-6));
        }
    }
}

TEST_CASE("rank-deficient content covariance stays finite") {
    // grayscale content: every channel identical -> covariance rank 1
    Rng rng(17);
    std::vector<double> content;
    for (int i = 0; i < 300; ++i) {
        double g = rng.uniform(0.0, 1.0);
        content.insert(content.end(), {g, g, g});
    }
    std::vector<double> style = random_samples(300, 18);
    ColorTransform t = solve_color_match(content, style);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) CHECK(std::isfinite(t.A[r][c]));

    ImageGrid img = image_from(content, 30, 10);
    ImageGrid out = apply_color_match(img, MaskGrid(30, 10, true), t, true);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 30; ++x)
            for (int c = 0; c < 3; ++c) {
                CHECK(std::isfinite(out.pixel(x, y)[c]));
                CHECK(out.pixel(x, y)[c] >= 0.0);
                CHECK(out.pixel(x, y)[c] <= 1.0);
            }

    // fully constant content degenerates the same way and must not blow up
    std::vector<double> flat(300 * 3, 0.5);
    ColorTransform tf = solve_color_match(flat, style);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) CHECK(std::isfinite(tf.A[r][c]));
}

TEST_CASE("solver rejects degenerate sample lists") {
    std::vector<double> one = {0.1, 0.2, 0.3};
    std::vector<double> two = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    CHECK_THROWS_WITH_AS(solve_color_match(one, two), doctest::Contains("at least 2"),
                         ColorMatchError);
    CHECK_THROWS_WITH_AS(solve_color_match(two, one), doctest::Contains("at least 2"),
                         ColorMatchError);
    CHECK_THROWS_WITH_AS(solve_color_match({0.1, 0.2}, two), doctest::Contains("triplets"),
                         ColorMatchError);
    CHECK_NOTHROW(solve_color_match(two, two));
}

TEST_CASE("gather_pixels honors the mask and scan order") {
    ImageGrid img(3, 2, 3, 0.0);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) {
            img.pixel(x, y)[0] = x;
            img.pixel(x, y)[1] = y;
            img.pixel(x, y)[2] = 0.5;
        }
    std::vector<double> all = gather_pixels(img, nullptr);
    REQUIRE(all.size() == 18);
    // row-major: (0,0) first, (1,0) second
    CHECK(all[0] == 0.0);
    CHECK(all[3] == 1.0);
    CHECK(all[4] == 0.0);

    MaskGrid mask(3, 2, false);
    mask.set(2, 0, true);
    mask.set(0, 1, true);
    std::vector<double> some = gather_pixels(img, &mask);
    REQUIRE(some.size() == 6);
    CHECK(some[0] == 2.0); // (2,0) comes before (0,1)
    CHECK(some[1] == 0.0);
    CHECK(some[3] == 0.0);
    CHECK(some[4] == 1.0);

    ImageGrid gray(3, 2, 1, 0.0);
    CHECK_THROWS_WITH_AS(gather_pixels(gray, nullptr), doctest::Contains("3-channel"),
                         ColorMatchError);
}

TEST_CASE("apply_color_match only rewrites masked texels") {
    std::vector<double> content = random_samples(64, 21);
    std::vector<double> style = random_samples(64, 22);
    ColorTransform t = solve_color_match(content, style);

    ImageGrid img = image_from(content, 8, 8);
    MaskGrid mask(8, 8, false);
    for (int x = 0; x < 8; ++x) mask.set(x, 3, true);

    ImageGrid out = apply_color_match(img, mask, t, true);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c) {
                if (y == 3)
                    continue; // rewritten row checked below
                CHECK(out.pixel(x, y)[c] == img.pixel(x, y)[c]);
            }
    for (int x = 0; x < 8; ++x) {
        double want[3];
        t.apply(img.pixel(x, 3), want);
        for (int c = 0; c < 3; ++c)
            CHECK(out.pixel(x, 3)[c] == std::clamp(want[c], 0.0, 1.0));
    }

    MaskGrid wrong(4, 4, true);
    CHECK_THROWS_WITH_AS(apply_color_match(img, wrong, t, true), doctest::Contains("mask"),
                         ColorMatchError);
}

TEST_CASE("clamping keeps matched texels inside the displayable range") {
    // style far outside [0,1] drags content out of gamut; clamp must rein it in
    std::vector<double> content = random_samples(200, 31);
    std::vector<double> style = random_samples(200, 32, 2.0, 5.0);
    ColorTransform t = solve_color_match(content, style);

    ImageGrid img = image_from(content, 20, 10);
    ImageGrid raw = apply_color_match(img, MaskGrid(20, 10, true), t, false);
    ImageGrid clamped = apply_color_match(img, MaskGrid(20, 10, true), t, true);

    bool saw_out_of_gamut = false;
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 20; ++x)
            for (int c = 0; c < 3; ++c) {
                double r = raw.pixel(x, y)[c];
                if (r < 0.0 || r > 1.0) saw_out_of_gamut = true;
                CHECK(clamped.pixel(x, y)[c] == std::clamp(r, 0.0, 1.0));
            }
    CHECK(saw_out_of_gamut);
}
