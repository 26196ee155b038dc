#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "treeqa/eval/metrics.hpp"

namespace treeqa::eval {

struct QuestionRecord {
    std::string id;
    std::string question;
    std::vector<std::string> answers;   // acceptable short answers
    std::vector<std::string> entities;  // disambiguated entity surfaces
    std::vector<QaPair> qa_pairs;       // disambiguated sub-questions
};

// Adapters: "unified", "hotpotqa", "musique", "2wikimqa", "ambigdoc", "asqa".
const std::vector<std::string>& dataset_formats();

QuestionRecord parse_record(std::string_view line, std::string_view format);

// Throws LineError(SchemaMismatch) naming the offending line; duplicate ids
// are rejected too.
std::vector<QuestionRecord> load_dataset(const std::filesystem::path& path, std::string_view format = "unified");

// Chooses n records by a seeded partial Fisher-Yates shuffle over indices and
// returns them in their original file order.
std::vector<QuestionRecord> sample(const std::vector<QuestionRecord>& records, std::size_t n, std::uint64_t seed);

}  // namespace treeqa::eval
