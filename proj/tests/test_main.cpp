#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "hitlist/error.hpp"

int main(int argc, char** argv) {
  hitlist::set_warnings_enabled(false);
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
