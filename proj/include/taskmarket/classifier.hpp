#pragma once

// Two-stage job-title classification into the five functional categories:
// an external classifier answering with numeric codes per batch, and a
// deterministic keyword lexicon for titles the external stage cannot settle.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "taskmarket/error.hpp"
#include "taskmarket/model.hpp"

namespace taskmarket {

enum class FunctionalCategory : int {
  Management = 1,
  Professional = 2,
  Technical = 3,
  Auxiliary = 4,
  Physical = 5,
};

inline constexpr std::array<FunctionalCategory, 5> kAllCategories{
    FunctionalCategory::Management, FunctionalCategory::Professional, FunctionalCategory::Technical,
    FunctionalCategory::Auxiliary, FunctionalCategory::Physical};

constexpr int code_of(FunctionalCategory c) noexcept { return static_cast<int>(c); }

constexpr std::string_view to_string(FunctionalCategory c) noexcept {
  switch (c) {
    case FunctionalCategory::Management: return "management";
    case FunctionalCategory::Professional: return "professional";
    case FunctionalCategory::Technical: return "technical";
    case FunctionalCategory::Auxiliary: return "auxiliary";
    case FunctionalCategory::Physical: return "physical";
  }
  return "?";
}

inline std::optional<FunctionalCategory> category_from_code(int code) noexcept {
  if (code < 1 || code > 5) return std::nullopt;
  return static_cast<FunctionalCategory>(code);
}

inline std::optional<FunctionalCategory> parse_category_name(std::string_view name) noexcept {
  for (auto c : kAllCategories) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

constexpr OccupationKind to_occupation(FunctionalCategory c) noexcept {
  switch (c) {
    case FunctionalCategory::Management: return OccupationKind::Mgmt;
    case FunctionalCategory::Professional: return OccupationKind::Prof;
    case FunctionalCategory::Technical: return OccupationKind::Tech;
    case FunctionalCategory::Auxiliary: return OccupationKind::Aux;
    case FunctionalCategory::Physical: return OccupationKind::Phys;
  }
  return OccupationKind::Phys;
}

constexpr FunctionalCategory to_category(OccupationKind k) noexcept {
  switch (k) {
    case OccupationKind::Mgmt: return FunctionalCategory::Management;
    case OccupationKind::Prof: return FunctionalCategory::Professional;
    case OccupationKind::Tech: return FunctionalCategory::Technical;
    case OccupationKind::Aux: return FunctionalCategory::Auxiliary;
    case OccupationKind::Phys: return FunctionalCategory::Physical;
  }
  return FunctionalCategory::Physical;
}

// Trim, collapse runs of ASCII whitespace to one space, lowercase ASCII.
// Non-ASCII bytes (CJK titles) pass through untouched.
inline std::string normalize_title(std::string_view title) {
  std::string out;
  out.reserve(title.size());
  bool pending_space = false;
  for (unsigned char ch : title) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(ch < 0x80 ? static_cast<char>(std::tolower(ch)) : static_cast<char>(ch));
  }
  return out;
}

// Number of UTF-8 code points (continuation bytes are not counted).
inline std::size_t utf8_length(std::string_view s) noexcept {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

class Lexicon {
 public:
  Lexicon() = default;

  void set(FunctionalCategory c, std::vector<std::string> phrases) {
    std::vector<std::string> normalized;
    for (const auto& p : phrases) {
      auto n = normalize_title(p);
      if (!n.empty()) normalized.push_back(std::move(n));
    }
    if (normalized.empty()) {
      throw ConfigError("lexicon category " + std::string(to_string(c)) + " has no phrases");
    }
    phrases_[static_cast<std::size_t>(code_of(c) - 1)] = std::move(normalized);
  }

  const std::vector<std::string>& phrases(FunctionalCategory c) const noexcept {
    return phrases_[static_cast<std::size_t>(code_of(c) - 1)];
  }

  void validate() const {
    for (auto c : kAllCategories) {
      if (phrases(c).empty()) {
        throw ConfigError("lexicon category " + std::string(to_string(c)) + " has no phrases");
      }
    }
  }

 private:
  std::array<std::vector<std::string>, 5> phrases_;
};

// Seeded from the category exemplars used when the taxonomy was defined,
// plus common Chinese equivalents.
inline Lexicon default_lexicon() {
  Lexicon lex;
  lex.set(FunctionalCategory::Management,
          {"manager", "director", "ceo", "chief", "president", "head of", "supervisor",
           "经理", "总监", "总裁", "主管"});
  lex.set(FunctionalCategory::Professional,
          {"doctor", "physician", "lawyer", "attorney", "accountant", "engineer",
           "software engineer", "lecturer", "professor", "researcher", "scientist", "auditor",
           "pharmacist", "工程师", "医生", "律师", "会计", "研究员", "讲师"});
  lex.set(FunctionalCategory::Technical,
          {"programmer", "technician", "developer", "web designer", "designer", "legal assistant",
           "tester", "maintenance", "程序员", "技术员", "开发", "测试", "运维", "设计师"});
  lex.set(FunctionalCategory::Auxiliary,
          {"assistant", "clerk", "secretary", "receptionist", "administrative", "data entry",
           "cashier", "customer service", "助理", "文员", "秘书", "前台", "行政", "客服"});
  lex.set(FunctionalCategory::Physical,
          {"cleaner", "laborer", "labourer", "driver", "electrician", "warehouse", "worker",
           "assembler", "welder", "machine operator", "packer", "loader", "security guard",
           "保洁", "普工", "司机", "电工", "仓库", "操作工", "搬运"});
  return lex;
}

// Most matched phrases wins; ties go to the longest single matched phrase,
// then the lowest category code. No match -> nullopt.
inline std::optional<FunctionalCategory> classify_keyword(std::string_view title, const Lexicon& lex) {
  const std::string norm = normalize_title(title);
  std::optional<FunctionalCategory> best;
  std::size_t best_count = 0;
  std::size_t best_longest = 0;
  for (auto c : kAllCategories) {
    std::size_t count = 0;
    std::size_t longest = 0;
    for (const auto& phrase : lex.phrases(c)) {
      if (norm.find(phrase) != std::string::npos) {
        ++count;
        longest = std::max(longest, utf8_length(phrase));
      }
    }
    if (count == 0) continue;
    if (!best || count > best_count || (count == best_count && longest > best_longest)) {
      best = c;
      best_count = count;
      best_longest = longest;
    }
  }
  return best;
}

// Strict parse: exactly `expected` whitespace-separated tokens, each a single
// digit 1-5. Any deviation invalidates the whole batch (every entry nullopt).
inline std::vector<std::optional<FunctionalCategory>> parse_external_response(std::string_view raw,
                                                                              std::size_t expected) {
  std::vector<std::optional<FunctionalCategory>> invalid(expected);
  std::vector<std::optional<FunctionalCategory>> parsed;
  parsed.reserve(expected);
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && is_space(raw[i])) ++i;
    if (i >= raw.size()) break;
    std::size_t j = i;
    while (j < raw.size() && !is_space(raw[j])) ++j;
    const std::string_view token = raw.substr(i, j - i);
    if (token.size() != 1 || token[0] < '1' || token[0] > '5') return invalid;
    if (parsed.size() == expected) return invalid;
    parsed.emplace_back(category_from_code(token[0] - '0'));
    i = j;
  }
  if (parsed.size() != expected) return invalid;
  return parsed;
}

// A batch classifier behind some transport. Implementations must tolerate
// concurrent calls. nullopt signals a transport failure.
class ExternalClassifier {
 public:
  virtual ~ExternalClassifier() = default;
  virtual std::optional<std::string> classify(std::size_t batch_index,
                                              std::span<const std::string> titles) const = 0;
};

// Replays canned responses: line i answers batch i. Batches past the end of
// the script fail as if the transport were down.
class ScriptedClassifier : public ExternalClassifier {
 public:
  ScriptedClassifier() = default;
  explicit ScriptedClassifier(std::vector<std::string> responses) : responses_(std::move(responses)) {}

  // A missing file yields an empty script (every batch falls back).
  static ScriptedClassifier from_file(const std::string& path) {
    std::vector<std::string> lines;
    std::ifstream in(path);
    std::string line;
    while (in && std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
    return ScriptedClassifier(std::move(lines));
  }

  std::optional<std::string> classify(std::size_t batch_index,
                                      std::span<const std::string>) const override {
    if (batch_index >= responses_.size()) return std::nullopt;
    return responses_[batch_index];
  }

 private:
  std::vector<std::string> responses_;
};

enum class ClassificationMethod { External, Keyword, Unresolved };

constexpr std::string_view to_string(ClassificationMethod m) noexcept {
  switch (m) {
    case ClassificationMethod::External: return "external";
    case ClassificationMethod::Keyword: return "keyword";
    case ClassificationMethod::Unresolved: return "unresolved";
  }
  return "?";
}

struct ClassificationResult {
  std::string title;
  std::optional<FunctionalCategory> category;  // nullopt when unresolved
  ClassificationMethod method = ClassificationMethod::Unresolved;
};

struct BatchPlan {
  std::size_t batch_size = 30;
  std::size_t max_concurrency = 1;

  std::size_t batch_count(std::size_t titles) const noexcept {
    return batch_size == 0 ? 0 : (titles + batch_size - 1) / batch_size;
  }
};

inline std::vector<ClassificationResult> classify_batch(std::span<const std::string> titles,
                                                        const ExternalClassifier& ext,
                                                        const Lexicon& lex,
                                                        const BatchPlan& plan = {}) {
  if (plan.batch_size == 0) throw DomainError("batch_size must be at least 1");
  if (plan.max_concurrency == 0) throw DomainError("max_concurrency must be at least 1");

  std::vector<ClassificationResult> results(titles.size());
  const std::size_t batches = plan.batch_count(titles.size());

  auto run_batch = [&](std::size_t b) {
    const std::size_t begin = b * plan.batch_size;
    const std::size_t end = std::min(titles.size(), begin + plan.batch_size);
    const auto chunk = titles.subspan(begin, end - begin);
    std::vector<std::optional<FunctionalCategory>> parsed(chunk.size());
    if (auto raw = ext.classify(b, chunk)) parsed = parse_external_response(*raw, chunk.size());
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      auto& r = results[begin + i];
      r.title = chunk[i];
      if (parsed[i]) {
        r.category = parsed[i];
        r.method = ClassificationMethod::External;
      } else if (auto kw = classify_keyword(chunk[i], lex)) {
        r.category = kw;
        r.method = ClassificationMethod::Keyword;
      } else {
        r.category.reset();
        r.method = ClassificationMethod::Unresolved;
      }
    }
  };

  const std::size_t workers = std::min(plan.max_concurrency, batches);
  if (workers <= 1) {
    for (std::size_t b = 0; b < batches; ++b) run_batch(b);
    return results;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < batches; b = next++) run_batch(b);
      });
    }
  }
  return results;
}

struct MethodAccuracy {
  std::size_t n = 0;
  std::size_t correct = 0;

  // Undefined for an empty partition.
  std::optional<double> accuracy() const noexcept {
    if (n == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(n);
  }
};

struct AccuracyReport {
  MethodAccuracy external;
  MethodAccuracy keyword;
  MethodAccuracy overall;     // unresolved titles count as incorrect here
  std::size_t unresolved = 0;
};

struct LabeledTitle {
  std::string title;
  FunctionalCategory truth = FunctionalCategory::Management;
};

inline AccuracyReport evaluate_accuracy(std::span<const LabeledTitle> labeled,
                                        std::span<const ClassificationResult> results) {
  if (labeled.size() != results.size()) {
    throw DomainError("evaluate_accuracy: " + std::to_string(labeled.size()) + " labels for " +
                      std::to_string(results.size()) + " results");
  }
  AccuracyReport report;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (labeled[i].title != results[i].title) {
      throw DomainError("evaluate_accuracy: row " + std::to_string(i) + " titles differ");
    }
    const bool correct = results[i].category && *results[i].category == labeled[i].truth;
    ++report.overall.n;
    report.overall.correct += correct ? 1 : 0;
    switch (results[i].method) {
      case ClassificationMethod::External:
        ++report.external.n;
        report.external.correct += correct ? 1 : 0;
        break;
      case ClassificationMethod::Keyword:
        ++report.keyword.n;
        report.keyword.correct += correct ? 1 : 0;
        break;
      case ClassificationMethod::Unresolved:
        ++report.unresolved;
        break;
    }
  }
  return report;
}

}  // namespace taskmarket
