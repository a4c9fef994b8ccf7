#include <iostream>
#include <string>

#include "nsieve/acceptance.hpp"

int main(int argc, char** argv) {
  nsieve::AcceptanceOptions opts;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << arg << "\n";
        std::exit(2);
      }
      return argv[++i];
    };
    if (arg == "--profile") {
      opts.profile = nsieve::acceptance_profile_from_string(next());
    } else if (arg == "--seed") {
      opts.seed = std::stoull(next());
    } else if (arg == "--threads") {
      opts.threads = static_cast<unsigned>(std::stoul(next()));
    } else if (arg == "--only") {
      opts.only.push_back(std::stoi(next()));
    } else {
      std::cerr << "unknown argument " << arg << "\n";
      return 2;
    }
  }
  const auto results = nsieve::run_acceptance(opts, std::cout);
  return nsieve::all_passed(results) ? 0 : 1;
}
