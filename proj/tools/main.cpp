#include <cstdio>

int main() {
  std::puts("continuum: pipeline CLI (under construction)");
  return 0;
}
