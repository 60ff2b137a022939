#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "coxmono/survival_data.hpp"
#include "support.hpp"

using namespace coxmono;

namespace {

Dataset parse(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
}

std::string parse_error(const std::string& text) {
    try {
        parse(text);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(LoadCsv, ParsesTwoRows) {
    const Dataset d = parse("time,status,z1\n1.0,1,0.2\n2.0,0,0.8\n");
    EXPECT_EQ(d.size(), 2u);
    EXPECT_EQ(d.dim(), 1u);
    EXPECT_EQ(d.time(1), 2.0);
    EXPECT_EQ(d.status(1), 0);
    EXPECT_EQ(d.covariates(0)[0], 0.2);
}

TEST(LoadCsv, FromFile) {
    const auto path = std::filesystem::temp_directory_path() / "coxmono_load_csv.csv";
    {
        std::ofstream f(path);
        f << "time,status,z1,z2\n# comment\n\n0.5,1,1,2\n1.5,0,3,4\n";
    }
    const Dataset d = load_csv(path.string());
    EXPECT_EQ(d.size(), 2u);
    EXPECT_EQ(d.dim(), 2u);
    EXPECT_EQ(d.covariates(1)[1], 4.0);
    std::filesystem::remove(path);
    EXPECT_THROW(load_csv(path.string()), DataError);
}

TEST(LoadCsv, ErrorsNameTheLine) {
    EXPECT_EQ(parse_error("time,status,z1\n-1.0,1,0.0\n1,1,0\n"), "negative time at line 2");
    EXPECT_NE(parse_error("time,status,z1\n1.0,1,0\n1.0,2,0.0\n").find("status must be 0 or 1"), std::string::npos);
    EXPECT_EQ(parse_error("time,status,z1\n1.0,1,0\n2.0,1\n"), "expected 3 fields, found 2 at line 3");
    EXPECT_EQ(parse_error("time,status,z1\n1.0,1,abc\n2,1,0\n"), "non-numeric covariate z1 at line 2");
    EXPECT_EQ(parse_error("time,status,z1\nx,1,0\n2,1,0\n"), "non-numeric time at line 2");
    EXPECT_NE(parse_error("a,b,c\n1,1,0\n").find("header"), std::string::npos);
    EXPECT_NE(parse_error(""), "");
}

TEST(Dataset, RejectsInvalidShapes) {
    EXPECT_THROW(Dataset({1.0}, {1}, {0.0}, 1), DataError);                     // n < 2
    EXPECT_THROW(Dataset({1.0, 2.0}, {1, 1}, {}, 0), DataError);                // d = 0
    EXPECT_THROW(Dataset({1.0, 2.0}, {1, 1}, {0.0}, 1), DataError);             // short covariates
    EXPECT_THROW(Dataset(std::vector<Observation>{{1.0, 1, {0.0}}, {2.0, 1, {0.0, 1.0}}}), DataError);
}

TEST(Dataset, SortedIndexBreaksTiesByStatusThenInputOrder) {
    const Dataset d({2.0, 1.0, 2.0, 2.0, 0.5}, {0, 1, 1, 0, 0}, {0, 0, 0, 0, 0}, 1);
    const std::vector<std::size_t> expected{4, 1, 2, 0, 3};
    EXPECT_EQ(d.sorted_index(), expected);
}

TEST(Dataset, SortedIndexIsOrderedPermutation) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Dataset d = support::random_dataset(rng, 2 + rng.below(60), 2, true);
        auto idx = d.sorted_index();
        for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
            const auto a = idx[k], b = idx[k + 1];
            ASSERT_LE(d.time(a), d.time(b));
            if (d.time(a) == d.time(b)) {
                ASSERT_GE(d.status(a), d.status(b));
                if (d.status(a) == d.status(b)) {
                    ASSERT_LT(a, b);
                }
            }
        }
        std::sort(idx.begin(), idx.end());
        for (std::size_t k = 0; k < idx.size(); ++k) ASSERT_EQ(idx[k], k);
    }
}

TEST(Csv, WriteThenReadIsIdentity) {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const Dataset d = support::random_dataset(rng, 2 + rng.below(40), 1 + rng.below(3), trial % 2 == 0);
        std::stringstream buf;
        write_csv(buf, d);
        const Dataset back = read_csv(buf);
        ASSERT_EQ(back.times(), d.times());
        ASSERT_EQ(back.statuses(), d.statuses());
        ASSERT_EQ(back.covariate_matrix(), d.covariate_matrix());
    }
}

TEST(Split, SizesFollowFloorRule) {
    Rng rng(1);
    const Dataset ten = support::random_dataset(rng, 10, 1, false);
    const auto [a, b] = split(ten, 0.5, 1);
    EXPECT_EQ(a.size(), 5u);
    EXPECT_EQ(b.size(), 5u);
    const Dataset nine = support::random_dataset(rng, 9, 1, false);
    const auto [c, d] = split(nine, 1.0 / 3.0, 7);
    EXPECT_EQ(c.size(), 3u);
    EXPECT_EQ(d.size(), 6u);
}

TEST(Split, IsDeterministicPartition) {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 4 + rng.below(100);
        // distinct times so records can be identified by time
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) + 0.5;
        const Dataset d(t, std::vector<int>(n, 1), std::vector<double>(n, 0.0), 1);
        const double ratio = 0.2 + 0.6 * rng.uniform();
        if (std::floor(ratio * n) < 2 || n - std::floor(ratio * n) < 2) continue;
        const std::uint64_t seed = rng.next_u64();
        const auto [a, b] = split(d, ratio, seed);
        const auto [a2, b2] = split(d, ratio, seed);
        ASSERT_EQ(a.times(), a2.times());
        ASSERT_EQ(b.times(), b2.times());
        std::vector<double> all = a.times();
        all.insert(all.end(), b.times().begin(), b.times().end());
        std::sort(all.begin(), all.end());
        ASSERT_EQ(all, t);
        ASSERT_TRUE(std::is_sorted(a.times().begin(), a.times().end()));  // input order kept
    }
}

TEST(Split, DifferentSeedsGiveDifferentPartitions) {
    std::vector<double> t(40);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
    const Dataset d(t, std::vector<int>(40, 1), std::vector<double>(40, 0.0), 1);
    EXPECT_NE(split(d, 0.5, 1).first.times(), split(d, 0.5, 2).first.times());
}

TEST(Split, RejectsTinySubsamples) {
    const Dataset d({1, 2, 3}, {1, 1, 1}, {0, 0, 0}, 1);
    EXPECT_THROW(split(d, 0.5, 1), DataError);
    EXPECT_THROW(split(d, 1.0, 1), DataError);
}
