#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "market/compliance.hpp"

namespace market::cli {

struct CorpusFailure {
  std::string fixture_id;
  bool expected = false;
  bool actual = false;
  std::string reason;
};

struct CorpusResult {
  std::string fixture_id;
  bool compliant = false;
  int classifier_calls = 0;
  std::string reason;
};

struct CorpusReport {
  std::size_t total = 0;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::vector<CorpusFailure> failures;
  std::vector<CorpusResult> results;

  nlohmann::json to_json() const;
};

// Each fixture runs through check_compliance against a mock classifier that
// knows only the corpus's own canned responses.
CorpusReport check_corpus(const std::vector<compliance::CorpusFixture>& fixtures,
                          const compliance::BlacklistConfig& blacklist,
                          const compliance::ClassifierSettings& settings = {});

// Entry point behind the `market` binary. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace market::cli
