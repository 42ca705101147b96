#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace qpragma;
using qptest::run_file;
using qptest::run_src;

TEST_CASE("empty program issues no requests") {
    RunResult r = run_src("int64 main() { return 0; }");
    CHECK(r.stats.requests == 0);
    CHECK(r.stats.gates == 0);
    CHECK(r.histogram.empty());
}

TEST_CASE("three allocations and four routine calls cost seven requests") {
    RunResult r = run_file("listing10_routine.qpc");
    CHECK(r.stats.requests == 7);
}

TEST_CASE("allocation with initialization is a single request") {
    // one request for alloc + init, one for the automatic uncompute at the
    // end of the enclosing block (the region was never measured)
    RunResult r = run_src(R"(
int64 main()
{
    quint<8> q = 200UL;
    return 0;
}
)");
    CHECK(r.stats.requests == 2);

    // an uninitialized register costs just the allocation
    RunResult bare = run_src("int64 main() { qbool q; return 0; }");
    CHECK(bare.stats.requests == 1);
}

TEST_CASE("a scope collapses its body into one request") {
    RunResult scoped = run_file("listing06_scope.qpc");
    CHECK(scoped.stats.requests == 1);
    RunResult host = run_file("listing06_noscope.qpc");
    CHECK(host.stats.requests > 100);
    // the two programs produce the same measurement record for equal seeds
    CHECK(scoped.histogram == host.histogram);
    CHECK(scoped.prints == host.prints);
}

TEST_CASE("with-clause transfers: two per variable") {
    RunResult r = run_file("listing07_scope_with.qpc");
    CHECK(r.stats.transfers == 2);
    RunResult shor = run_file("shor15.qpc");
    CHECK(shor.stats.transfers == 4);  // two variables in the with list
}

TEST_CASE("move directives count one transfer per variable per move") {
    RunResult r = run_file("listing08_move.qpc");
    CHECK(r.stats.transfers == 2);  // toDevice + toHost of one variable
}

TEST_CASE("remote access accounting for host variables inside a scope") {
    RunResult r = run_src(R"(
int64 main()
{
    int64 host_val = 3;
    int64 sink = 0;
    #pragma quantum scope
    {
        sink = host_val + 1;
    }
    return 0;
}
)");
    CHECK(r.stats.remote_reads == 1);
    CHECK(r.stats.remote_writes == 1);

    RunResult moved = run_src(R"(
int64 main()
{
    int64 host_val = 3;
    int64 sink = 0;
    #pragma quantum scope with(host_val, sink)
    {
        sink = host_val + 1;
    }
    return 0;
}
)");
    CHECK(moved.stats.remote_reads == 0);
    CHECK(moved.stats.remote_writes == 0);
    CHECK(moved.stats.transfers == 4);
}

TEST_CASE("quantum handles used in a scope do not count as remote") {
    // a qbool is a handle to QPU memory: touching it from QPU code is local
    RunResult r = run_file("listing06_scope.qpc");
    CHECK(r.stats.remote_reads == 0);
}

TEST_CASE("stats come from the first shot; histogram spans all shots") {
    RunConfig cfg;
    cfg.shots = 64;
    cfg.seed = 17;
    RunResult r = run_file("bell.qpc", cfg);
    CHECK(r.stats.requests == 5);  // not multiplied by shots
    std::uint64_t total = 0;
    for (const auto& [k, v] : r.histogram) total += v;
    CHECK(total == 64);
    for (const auto& [k, v] : r.histogram) CHECK((k == "00" || k == "11"));
}

TEST_CASE("determinism: equal seeds give identical results") {
    RunConfig cfg;
    cfg.shots = 100;
    cfg.seed = 4;
    RunResult a = run_file("uniform200.qpc", cfg);
    RunResult b = run_file("uniform200.qpc", cfg);
    CHECK(a.histogram == b.histogram);
    CHECK(a.prints == b.prints);
    cfg.seed = 5;
    RunResult c = run_file("uniform200.qpc", cfg);
    CHECK(a.histogram != c.histogram);
}

TEST_CASE("measured regions skip uncomputation; unmeasured ones are restored") {
    RunConfig cfg;
    cfg.check_uncompute = true;
    // unmeasured register with an initializer: restored by inverse prep
    CHECK_NOTHROW(run_src("int64 main() { quint<4> q = 9UL; return 0; }", cfg));
    // gates without a recorded prep leave the region dirty
    CHECK_THROWS_AS(run_src("int64 main() { qbool q; H(q); return 0; }", cfg),
                    ExecError);
    // measuring first clears the obligation
    CHECK_NOTHROW(run_src(
        "int64 main() { qbool q; H(q); bool b = measure_and_reset(q); return 0; }", cfg));
}

TEST_CASE("routine bodies count as one request regardless of size") {
    RunResult r = run_file("listing11_qft.qpc");
    // alloc + call + reset
    CHECK(r.stats.requests == 3);
    CHECK(r.stats.gates == 36);
}

TEST_CASE("histogram keys are MSB-left bitstrings of measured registers") {
    RunResult r = run_file("listing02_cast.qpc");
    REQUIRE(r.histogram.size() == 1);
    CHECK(r.histogram.begin()->first == "00001100");
    CHECK(r.prints == std::vector<std::string>{"12"});
}
