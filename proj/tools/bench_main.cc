// Writes the synthetic repetition benchmark (manifest, frame lists, lexicon).
#include <iostream>

#include "CLI11.hpp"
#include "refrain/benchmark.h"
#include "refrain/error.h"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic repetition benchmark", "refrain-bench"};
  refrain::BenchmarkOptions options;
  std::string out;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--queries", options.queries, "Number of queries")->check(CLI::PositiveNumber);
  app.add_option("--frames", options.frames, "Frames per video");
  app.add_option("--clips", options.clips, "Clip count the benchmark is built for");
  app.add_option("--seed", options.seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto bench = refrain::make_repetition_benchmark(options);
    refrain::write_benchmark(bench, out);
    std::cout << "videos " << bench.videos.size() << "\n";
  } catch (const refrain::Error& e) {
    std::cerr << "refrain-bench: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
