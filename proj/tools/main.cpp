// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/app/cli.hpp"

int main(int argc, char** argv) { return felab::app::run_cli(argc, argv); }
