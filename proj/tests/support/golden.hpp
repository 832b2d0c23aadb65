#pragma once

// Golden-file cases for the CLI: fixed inputs under tests/golden, outputs
// compared byte for byte. Set SCILIB_UPDATE_GOLDEN=1 to rewrite them.

#include <cstdlib>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "subprocess.hpp"

namespace golden {

inline std::string dir() { return SCILIB_GOLDEN_DIR; }

inline bool updating() {
  const char* v = std::getenv("SCILIB_UPDATE_GOLDEN");
  return v != nullptr && std::string(v) == "1";
}

inline std::map<std::string, std::string> clean_env() {
  return {{"LD_PRELOAD", ""},       {"SCILIB_STRATEGY", ""},        {"SCILIB_THRESHOLD", ""},
          {"SCILIB_ROUTINES", ""},  {"SCILIB_DEBUG", ""},           {"SCILIB_PAGE_SIZE", ""},
          {"SCILIB_TRACE", ""},     {"SCILIB_DEVICE_CAPACITY", ""}, {"SCILIB_STATS", ""}};
}

struct Case {
  std::string name;
  std::vector<std::string> args;  // "{IN}/x" is a golden input, "{OUT}" a scratch file
  std::string stdout_golden;      // empty: stdout not compared
  std::string file_golden;        // empty: no output file
};

inline std::vector<Case> cases() {
  return {
      {"gen", {"gen", "--matrices", "3", "--reuse", "4", "--dims", "32,2400,93536", "--seed", "7",
               "--out", "{OUT}"}, "", "gen_3x4.jsonl"},
      {"replay_mixed_s3", {"replay", "--trace", "{IN}/mixed.jsonl", "--strategy", "3", "--out", "{OUT}"},
       "replay_mixed_s3.txt", "replay_mixed_s3.json"},
      {"replay_gen_s1_h100", {"replay", "--trace", "{IN}/gen_3x4.jsonl", "--strategy", "1",
                              "--profile", "h100_pcie", "--out", "{OUT}"},
       "replay_gen_s1_h100.txt", "replay_gen_s1_h100.json"},
      {"compare_mixed", {"compare", "--trace", "{IN}/mixed.jsonl", "--out", "{OUT}"},
       "compare_mixed.txt", "compare_mixed.json"},
      {"compare_gen_threshold", {"compare", "--trace", "{IN}/gen_3x4.jsonl", "--threshold", "1000",
                                 "--page-size", "65536", "--strategies", "3,1"},
       "compare_gen_threshold.txt", ""},
  };
}

struct Outcome {
  int exit_code = -1;
  std::string stdout_text;
  std::string file_text;
  std::string err;
};

inline Outcome run_case(const std::string& cli, const Case& c) {
  // Same scratch path on every run, so outputs that echo it stay comparable.
  const char* tmp = std::getenv("TMPDIR");
  const std::string out = std::string(tmp ? tmp : "/tmp") + "/scilib_golden_" + c.name;
  std::vector<std::string> argv = {cli};
  for (std::string a : c.args) {
    if (a == "{OUT}") a = out;
    else if (a.rfind("{IN}", 0) == 0) a = dir() + a.substr(4);
    argv.push_back(a);
  }
  const testsupport::RunResult r = testsupport::run(argv, clean_env());
  Outcome o;
  o.exit_code = r.exit_code;
  o.stdout_text = r.out;
  o.err = r.err;
  if (!c.file_golden.empty()) o.file_text = testsupport::read_file(out);
  std::remove(out.c_str());
  return o;
}

inline std::string expected(const std::string& name) { return testsupport::read_file(dir() + "/" + name); }

inline void write(const Case& c, const Outcome& o) {
  if (!c.stdout_golden.empty()) std::ofstream(dir() + "/" + c.stdout_golden, std::ios::binary) << o.stdout_text;
  if (!c.file_golden.empty()) std::ofstream(dir() + "/" + c.file_golden, std::ios::binary) << o.file_text;
}

}  // namespace golden
