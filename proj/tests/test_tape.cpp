#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_util.hpp"

#include <cstring>

using namespace gip;
using test::check_gradients;
using test::random_tensor;

TEST_CASE("matmul with identity returns the input") {
    Tape tape;
    Value a = tape.param(Tensor::from({{1, 2}, {3, 4}}));
    Value out = tape.matmul(a, tape.constant(Tensor::identity(2)));
    CHECK(out.val().at(0, 0) == 1.0);
    CHECK(out.val().at(0, 1) == 2.0);
    CHECK(out.val().at(1, 0) == 3.0);
    CHECK(out.val().at(1, 1) == 4.0);
}

TEST_CASE("row softmax of a zero row is uniform") {
    Tape tape;
    Value out = tape.row_softmax(tape.param(Tensor(1, 4)));
    for (int j = 0; j < 4; ++j) CHECK(out.val().at(0, j) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("sigmoid at zero is one half") {
    Tape tape;
    Value out = tape.sigmoid(tape.param(Tensor(1, 1)));
    CHECK(out.item() == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("grad of sum(x*x) is 2x") {
    Tape tape;
    Value x = tape.param(Tensor::from({{1, 2}}));
    tape.backward(tape.sum(tape.mul(x, x)));
    const Tensor g = tape.grad(x);
    CHECK(g.at(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(g.at(0, 1) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("grad of trace(W^T L W) matches (L + L^T) W") {
    Rng rng(7);
    const Tensor l = random_tensor(3, 3, rng);
    const Tensor w0 = random_tensor(3, 3, rng);
    Tape tape;
    Value w = tape.param(w0);
    Value lv = tape.constant(l);
    tape.backward(tape.trace(tape.matmul(tape.transpose(w), tape.matmul(lv, w))));
    const Tensor g = tape.grad(w);
    const Tensor expect = matmul_plain([&] {
        Tensor s(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) s.at(i, j) = l.at(i, j) + l.at(j, i);
        return s;
    }(), w0);
    for (int i = 0; i < 9; ++i) CHECK(g[i] == doctest::Approx(expect[i]).epsilon(1e-10));
}

TEST_CASE("finite differences pass for every op kind") {
    Rng rng(42);

    SUBCASE("matmul") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.sum(t.matmul(p[0], p[1]));
        }, {random_tensor(2, 3, rng), random_tensor(3, 2, rng)});
    }
    SUBCASE("transpose") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.sum(t.mul(t.transpose(p[0]), p[1]));
        }, {random_tensor(2, 3, rng), random_tensor(3, 2, rng)});
    }
    SUBCASE("add and sub") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.sum(t.sub(t.add(p[0], p[1]), p[2]));
        }, {random_tensor(2, 3, rng), random_tensor(2, 3, rng), random_tensor(2, 3, rng)});
    }
    SUBCASE("scalar broadcast add/sub/mul/div") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            Value a = t.add(p[0], p[1]);      // matrix + 1x1
            Value b = t.sub(p[1], p[0]);      // 1x1 - matrix
            Value c = t.mul(a, p[1]);         // matrix * 1x1
            Value d = t.div(b, p[2]);         // matrix / 1x1
            return t.add(t.sum(c), t.sum(d));
        }, {random_tensor(2, 3, rng), Tensor::scalar(0.7), Tensor::scalar(1.3)});
    }
    SUBCASE("elementwise mul and div") {
        Tensor denom = random_tensor(2, 3, rng, 0.5, 1.5);
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.sum(t.div(t.mul(p[0], p[1]), p[2]));
        }, {random_tensor(2, 3, rng), random_tensor(2, 3, rng), denom});
    }
    SUBCASE("add_scalar and mul_scalar") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.sum(t.mul_scalar(t.add_scalar(p[0], 0.3), -1.7));
        }, {random_tensor(2, 3, rng)});
    }
    SUBCASE("row softmax") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.sum(t.mul(t.row_softmax(p[0]), p[1]));
        }, {random_tensor(2, 3, rng), random_tensor(2, 3, rng)});
    }
    SUBCASE("sigmoid") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.sum(t.sigmoid(p[0]));
        }, {random_tensor(2, 3, rng)});
    }
    SUBCASE("relu") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.sum(t.relu(p[0]));
        }, {random_tensor(2, 3, rng, 0.2, 1.0)});  // away from the kink
    }
    SUBCASE("log exp sqrt") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.add(t.sum(t.log(p[0])), t.add(t.sum(t.exp(p[1])), t.sum(t.sqrt(p[0]))));
        }, {random_tensor(2, 3, rng, 0.5, 2.0), random_tensor(2, 3, rng)});
    }
    SUBCASE("trace") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.trace(t.matmul(p[0], p[0]));
        }, {random_tensor(3, 3, rng)});
    }
    SUBCASE("frobenius norm") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.frobenius_norm(p[0]);
        }, {random_tensor(2, 3, rng, 0.3, 1.0)});
    }
    SUBCASE("concat rows and cols") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            Value r = t.concat_rows(p[0], p[1]);
            Value c = t.concat_cols(t.transpose(p[0]), t.transpose(p[1]));
            return t.add(t.sum(t.mul(r, r)), t.sum(t.mul(c, c)));
        }, {random_tensor(2, 3, rng), random_tensor(2, 3, rng)});
    }
    SUBCASE("slice") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.sum(t.mul(t.slice(p[0], 0, 2, 1, 3), t.slice(p[0], 1, 3, 0, 2)));
        }, {random_tensor(3, 3, rng)});
    }
    SUBCASE("max with scalar") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.sum(t.max_with_scalar(p[0], 0.0));
        }, {random_tensor(2, 3, rng, 0.2, 1.0)});
    }
    SUBCASE("reshape and diag part") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            Value sq = t.reshape(p[0], 3, 2);
            return t.add(t.sum(t.mul(sq, sq)), t.sum(t.diag_part(t.matmul(p[0], t.transpose(p[0])))));
        }, {random_tensor(2, 3, rng)});
    }
    SUBCASE("log1p sum exp") {
        check_gradients([](Tape& t, const std::vector<Value>& p) {
            return t.log1p_sum_exp(p[0]);
        }, {random_tensor(2, 3, rng, -2.0, 2.0)});
    }
}

TEST_CASE("log1p_sum_exp is stable for large arguments") {
    Tape tape;
    Value x = tape.param(Tensor::from({{500.0, 100.0}}));
    Value out = tape.log1p_sum_exp(x);
    CHECK(out.item() == doctest::Approx(500.0).epsilon(1e-12));
    tape.backward(out);
    const Tensor g = tape.grad(x);
    CHECK(g.at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::isfinite(g.at(0, 1)));
}

TEST_CASE("softmax gradient rows sum to zero under constant upstream") {
    Rng rng(3);
    Tape tape;
    Value x = tape.param(random_tensor(4, 5, rng));
    tape.backward(tape.mul_scalar(tape.sum(tape.row_softmax(x)), 2.5));
    const Tensor g = tape.grad(x);
    for (int i = 0; i < 4; ++i) {
        double row = 0.0;
        for (int j = 0; j < 5; ++j) row += g.at(i, j);
        CHECK(std::fabs(row) < 1e-12);
    }
}

TEST_CASE("backward is deterministic") {
    Rng rng(11);
    const Tensor a = random_tensor(3, 3, rng);
    const Tensor b = random_tensor(3, 3, rng);
    auto run = [&] {
        Tape tape;
        Value av = tape.param(a);
        Value bv = tape.param(b);
        Value out = tape.sum(tape.mul(tape.matmul(av, bv), tape.row_softmax(av)));
        tape.backward(out);
        return std::make_pair(tape.grad(av), tape.grad(bv));
    };
    auto [g1a, g1b] = run();
    auto [g2a, g2b] = run();
    CHECK(std::memcmp(g1a.data().data(), g2a.data().data(), sizeof(double) * g1a.size()) == 0);
    CHECK(std::memcmp(g1b.data().data(), g2b.data().data(), sizeof(double) * g1b.size()) == 0);
}

TEST_CASE("shape mismatch reports both shapes") {
    Tape tape;
    Value a = tape.param(Tensor(2, 3));
    Value b = tape.param(Tensor(4, 5));
    try {
        tape.matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);
        CHECK(msg.find("4x5") != std::string::npos);
    }
    CHECK_THROWS_AS(tape.add(a, b), ShapeError);
}

TEST_CASE("backward rejects non-scalar outputs") {
    Tape tape;
    Value a = tape.param(Tensor(2, 2));
    CHECK_THROWS_AS(tape.backward(a), ShapeError);
}

TEST_CASE("non-finite forward results are rejected") {
    Tape tape;
    Value neg = tape.param(Tensor::from({{-1.0}}));
    CHECK_THROWS_AS(tape.log(neg), NonFiniteError);
    Value zero = tape.param(Tensor::from({{0.0}}));
    CHECK_THROWS_AS(tape.div(tape.constant_scalar(1.0), zero), NonFiniteError);
}

TEST_CASE("fan-out accumulates adjoints") {
    Tape tape;
    Value x = tape.param(Tensor::from({{3.0}}));
    Value y = tape.add(tape.mul(x, x), tape.mul_scalar(x, 4.0));  // x^2 + 4x
    tape.backward(tape.sum(y));
    CHECK(tape.grad(x)[0] == doctest::Approx(10.0).epsilon(1e-12));  // 2x + 4
}
