// wander-synth: writes a planted Gaussian-cluster corpus plus its three
// embedding tables, ready for `wander pipeline`.

#include <CLI11.hpp>

#include <iostream>

#include "json.hpp"
#include "wander/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic corpus with planted label vocabulary"};
  wander::synthetic::Options opt;
  std::string dir;
  app.add_option("dir", dir, "Output directory")->required();
  app.add_option("--classes", opt.num_classes);
  app.add_option("--dim", opt.dim);
  app.add_option("--docs-per-class", opt.docs_per_class);
  app.add_option("--signature-tokens", opt.signature_tokens);
  app.add_option("--doc-length", opt.doc_length);
  app.add_option("--label-confusion", opt.label_confusion);
  app.add_option("--seed", opt.seed);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto data = wander::synthetic::generate(opt);
    const auto files = wander::synthetic::write(data, dir);
    nlohmann::json config = {{"corpus", files.corpus.filename().string()},
                             {"labels", files.labels.filename().string()},
                             {"doc_vectors", files.doc_vectors.filename().string()},
                             {"word_vectors", files.word_vectors.filename().string()},
                             {"sem_vectors", files.sem_vectors.filename().string()},
                             {"output_dir", "runs"}};
    std::ofstream(std::filesystem::path(dir) / "config.json") << config.dump(2) << '\n';
    std::cout << "wrote " << data.docs.size() << " documents to " << dir << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
