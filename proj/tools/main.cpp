// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "tvae/run.hpp"

int main(int argc, char** argv) { return tvae::run(argc, argv, std::cout, std::cerr); }
