#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qp/models.hpp"

#include <cstdio>
#include <fstream>

using namespace qp;

TEST_CASE("torus_model(1): dimensions and trivial structure maps") {
    ModelBundle b = torus_model(1);
    CHECK(b.dgla.g->dim() == 4);
    CHECK(b.xi.h->dim() == 4);
    CHECK(b.dgla.d.is_zero());
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(vec_is_zero(b.dgla.bracket.at(i, j)));
    CHECK(b.xi.n == 1);
    CheckReport rep = check_bundle(b);
    INFO(rep.first_failure());
    CHECK(rep.all_pass());
}

TEST_CASE("torus_model(2) and nilpotent_model pass all load-time checks") {
    for (const auto& b : {torus_model(2), nilpotent_model()}) {
        CheckReport rep = check_bundle(b);
        INFO(b.name << ": " << rep.first_failure());
        CHECK(rep.all_pass());
    }
    CHECK(torus_model(2).xi.n == 2);
    CHECK(nilpotent_model().xi.n == 0);
}

TEST_CASE("exterior algebra: product signs and contraction duality") {
    ExteriorAlgebra A({{"a", 1, -1}, {"b", 1, 1}});
    // a ^ b = - b ^ a
    auto ab = A.mul_masks(1, 2);
    auto ba = A.mul_masks(2, 1);
    REQUIRE(ab);
    REQUIRE(ba);
    CHECK(ab->first == 3);
    CHECK(ab->second == -ba->second);
    CHECK(!A.mul_masks(1, 1));
    // contraction is a left derivative: i_b (a ^ b) = -a
    QMat cb = A.contraction_operator(1);
    QVec v = mat_apply(cb, A.basis_vec(3));
    CHECK(v[1] == Rat(-1));
}

TEST_CASE("random_abelian_model: deterministic, valid, dims respected") {
    for (uint64_t seed : {1ull, 7ull, 42ull}) {
        ModelBundle a = random_abelian_model(seed, 4, 2);
        ModelBundle b = random_abelian_model(seed, 4, 2);
        CHECK(model_to_json(a) == model_to_json(b));
        CHECK(a.xi.h->dim() == 4);
        CheckReport rep = check_bundle(a);
        INFO("seed ", seed, ": ", rep.first_failure());
        CHECK(rep.all_pass());
    }
    ModelBundle c = random_abelian_model(3, 8, 2);
    CHECK(c.xi.h->dim() == 8);
    CHECK(check_bundle(c).all_pass());
}

TEST_CASE("random_abelian_model: axiom suite over many seeds") {
    for (uint64_t seed = 0; seed < 25; ++seed) {
        ModelBundle b = random_abelian_model(seed, (seed % 2) ? 8 : 4, 2);
        CheckReport rep = check_bundle(b);
        INFO("seed ", seed, ": ", rep.first_failure());
        REQUIRE(rep.all_pass());
    }
}

TEST_CASE("model JSON round-trip is the identity") {
    for (const auto& b : {torus_model(1), nilpotent_model(), random_abelian_model(11, 8, 2)}) {
        std::string j1 = model_to_json(b);
        ModelBundle r = model_from_json(j1);
        std::string j2 = model_to_json(r);
        CHECK(j1 == j2);
    }
}

TEST_CASE("save/load through a file") {
    ModelBundle b = torus_model(1);
    std::string path = "/tmp/qp_model_roundtrip.json";
    save_model(b, path);
    ModelBundle r = load_model(path);
    CHECK(model_to_json(b) == model_to_json(r));
    std::remove(path.c_str());
    CHECK_THROWS_AS((void)load_model("/tmp/definitely_missing_model.json"), std::runtime_error);
}

TEST_CASE("load rejects a model with a broken axiom, naming it") {
    // flip one nonzero entry of the contraction tensor of m(dzb1)
    std::string j = model_to_json(torus_model(1));
    auto pos = j.find("\"i\"");
    REQUIRE(pos != std::string::npos);
    auto neg = j.find("\"1\"", pos);
    REQUIRE(neg != std::string::npos);
    j.replace(neg, 3, "\"-1\"");
    try {
        (void)model_from_json(j);
        FAIL("expected validation failure");
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        CHECK(msg.find("model file failed validation") != std::string::npos);
    }
}

TEST_CASE("builtin_model lookup") {
    CHECK(builtin_model("torus.1").name == "torus.1");
    CHECK(builtin_model("random:5:8").xi.h->dim() == 8);
    CHECK_THROWS_AS((void)builtin_model("nope"), std::invalid_argument);
}
