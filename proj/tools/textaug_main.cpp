// Command-line front end. Subcommands: augment, train, eval, pipeline.
#include <cstdio>

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::puts("textaug: not wired up yet");
  return 2;
}
