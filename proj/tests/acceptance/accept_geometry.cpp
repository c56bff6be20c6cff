#include "acceptance.hpp"

int accept_geometry() { return 0; }
