#include <cstdio>
#include <string>

#include "core/synth.hpp"

using namespace spatialref;

int main(int argc, char** argv) {
  std::string out_dir = "fixtures";
  int count = 3;
  uint64_t seed = 7;
  bool unseen = false;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    auto next = [&](const char* flag) -> std::string {
      if (i + 1 >= argc) {
        std::fprintf(stderr, "%s needs a value\n", flag);
        std::exit(2);
      }
      return argv[++i];
    };
    if (arg == "--out") out_dir = next("--out");
    else if (arg == "--count") count = std::stoi(next("--count"));
    else if (arg == "--seed") seed = std::stoull(next("--seed"));
    else if (arg == "--unseen") unseen = true;
    else {
      std::fprintf(stderr,
                   "usage: make-fixtures [--out DIR] [--count N] [--seed S] "
                   "[--unseen]\n");
      return 2;
    }
  }

  SynthOptions opts;
  opts.unseen_categories = unseen;
  for (int i = 0; i < count; ++i) {
    std::string frame_id = "scene-" + std::to_string(i);
    SceneFrame scene = synth_scene(frame_id, seed + uint64_t(i), opts);
    std::string path = write_synth_scene(scene, out_dir);
    std::printf("wrote %s (%zu objects)\n", path.c_str(),
                scene.objects.size());
  }
  return 0;
}
