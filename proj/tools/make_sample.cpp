// Generates the bundled synthetic ApacheJIT-style sample. Deterministic for
// a given seed, so the committed CSV can always be rebuilt byte-for-byte.
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "jitanon/rng.hpp"

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

std::string hex_id(jitanon::SplitMix64& stream) {
    static const char* digits = "0123456789abcdef";
    std::string id;
    id.reserve(40);
    std::uint64_t word = 0;
    for (int i = 0; i < 40; ++i) {
        if (i % 16 == 0) word = stream.next_u64();
        id.push_back(digits[word & 0xF]);
        word >>= 4;
    }
    return id;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generate the bundled synthetic JIT sample"};
    int rows = 2000;
    std::uint64_t seed = 7;
    std::string out_path = "data/sample_jit_2000.csv";
    app.add_option("--rows", rows, "number of commits");
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--out", out_path, "output CSV path");
    CLI11_PARSE(app, argc, argv);

    std::string csv =
        "commit_id,author_date,la,ld,nf,nd,ns,ent,ndev,nuc,age,exp,rexp,sexp,buggy\n";
    int positives = 0;
    for (int i = 0; i < rows; ++i) {
        jitanon::SplitMix64 stream(
            jitanon::derive_substream_seed(seed, static_cast<std::uint64_t>(i)));
        const std::string id = hex_id(stream);
        const std::int64_t date =
            1356998400LL + static_cast<std::int64_t>(i) * 5400 +
            static_cast<std::int64_t>(stream.next_u64() % 5400);

        const int ns = 1 + static_cast<int>(std::pow(stream.next_uniform(), 3.0) * 4.999);
        const int nd = ns + static_cast<int>(std::pow(stream.next_uniform(), 2.0) * 14.999);
        const int nf = nd + static_cast<int>(std::pow(stream.next_uniform(), 2.0) * 30.0);
        const double ent = stream.next_uniform() * std::log2(static_cast<double>(nf) + 1.0);
        const int ndev = 1 + static_cast<int>(std::pow(stream.next_uniform(), 2.0) * 40.0);
        const int nuc = 1 + static_cast<int>(std::pow(stream.next_uniform(), 1.5) * 80.0);
        const double age = -30.0 * std::log(1.0 - stream.next_uniform());
        const int exp_ = 1 + static_cast<int>(std::pow(stream.next_uniform(), 1.2) * 300.0);
        const double rexp = exp_ * (0.3 + 0.7 * stream.next_uniform());
        const int sexp = static_cast<int>(exp_ * stream.next_uniform());

        const std::int64_t la =
            std::llround(std::exp(jitanon::sample_normal(stream) * 1.1 + 3.3));
        const std::int64_t ld =
            std::llround(std::exp(jitanon::sample_normal(stream) * 1.2 + 2.8));
        const double churn = static_cast<double>(la + ld);

        const double z = 1.5 * (ent / 5.0) +
                         1.2 * (std::log1p(static_cast<double>(nf)) / std::log(61.0)) +
                         0.9 * (std::log1p(static_cast<double>(ndev)) / std::log(41.0)) +
                         0.8 * (std::log1p(static_cast<double>(nuc)) / std::log(81.0)) -
                         1.1 * (std::log1p(static_cast<double>(exp_)) / std::log(301.0)) +
                         0.5 * (std::log1p(churn) / std::log(1200.0)) +
                         0.8 * jitanon::sample_normal(stream) - 2.2;
        const bool buggy = stream.next_uniform() < sigmoid(z);
        positives += buggy ? 1 : 0;

        // ~1.5% missing cells per QID column, like scraped histories have.
        const auto missing = [&]() { return stream.next_u64() % 1000 < 15; };

        csv += id;
        csv += ',' + std::to_string(date);
        csv += ',' + std::to_string(la);
        csv += ',' + std::to_string(ld);
        csv += ',';
        if (!missing()) csv += std::to_string(nf);
        csv += ',';
        if (!missing()) csv += std::to_string(nd);
        csv += ',';
        if (!missing()) csv += std::to_string(ns);
        csv += ',';
        if (!missing()) append_double(csv, ent);
        csv += ',';
        if (!missing()) csv += std::to_string(ndev);
        csv += ',';
        if (!missing()) csv += std::to_string(nuc);
        csv += ',';
        if (!missing()) append_double(csv, age);
        csv += ',';
        if (!missing()) csv += std::to_string(exp_);
        csv += ',';
        if (!missing()) append_double(csv, rexp);
        csv += ',';
        if (!missing()) csv += std::to_string(sexp);
        csv += ',';
        csv += buggy ? '1' : '0';
        csv += '\n';
    }

    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        std::cerr << "cannot write " << out_path << "\n";
        return 1;
    }
    out << csv;
    std::cerr << rows << " rows, " << positives << " buggy ("
              << 100.0 * positives / rows << "%) -> " << out_path << "\n";
    return 0;
}
