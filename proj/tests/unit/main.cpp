#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "pnlss/log.hpp"

int main(int argc, char** argv) {
    // Expected warnings (duplicated degrees, fallbacks) would drown the report.
    pnlss::log::set_level(pnlss::log::Level::Error);
    doctest::Context context(argc, argv);
    return context.run();
}
