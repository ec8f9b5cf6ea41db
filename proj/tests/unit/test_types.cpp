#include "zeroguide/types.hpp"

#include <doctest.h>

using namespace zeroguide;

TEST_CASE("cosine similarity basics") {
    Eigen::VectorXd a(2), b(2);
    a << 1, 0;
    b << 0, 1;
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    b << -2, 0;
    CHECK(cosine_similarity(a, b) == doctest::Approx(-1.0));
    b << 3, 3;
    CHECK(cosine_similarity(a, b) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("cosine similarity rejects bad input") {
    Eigen::VectorXd a(2), b(3);
    a << 1, 0;
    b << 1, 0, 0;
    CHECK_THROWS_AS(cosine_similarity(a, b), ShapeError);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(cosine_similarity(a.head(2), z), Error);
}

TEST_CASE("lenient cosine handles zero vectors") {
    Eigen::VectorXd a(2), z(2);
    a << 1, 1;
    z << 0, 0;
    CHECK(cosine_similarity_lenient(z, z) == doctest::Approx(1.0));
    CHECK(cosine_similarity_lenient(a, z) == doctest::Approx(0.0));
    CHECK(cosine_similarity_lenient(z, a) == doctest::Approx(0.0));
    CHECK(cosine_similarity_lenient(a, a) == doctest::Approx(1.0));
}

TEST_CASE("fnv1a64 matches the reference constants") {
    // Offset basis for empty input, then the standard single-byte vector.
    CHECK(fnv1a64(nullptr, 0) == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ull);
}

TEST_CASE("image content key tracks pixel content") {
    RgbImage img;
    img.height = 2;
    img.width = 2;
    img.data.assign(12, 10);
    const std::string k1 = image_content_key(img);
    CHECK(k1.size() == 16);
    const std::string k2 = image_content_key(img);
    CHECK(k1 == k2);
    img.data[5] = 11;
    CHECK(image_content_key(img) != k1);
}

TEST_CASE("segment mask area counts half-and-up") {
    SegmentMask m = SegmentMask::zeros(2, 2);
    CHECK(m.all_zero());
    CHECK(m.area() == 0);
    m.set(0, 0, 1.0f);
    m.set(0, 1, 0.5f);
    m.set(1, 0, 0.49f);
    CHECK(m.area() == 2);
    CHECK_FALSE(m.all_zero());
}
