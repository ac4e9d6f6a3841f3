// Copyright 2026 The lpdr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lpdr/image.hpp"

#include <fstream>

namespace lpdr {

void write_pgm(const std::string& path, const GrayImage& img) {
  if (img.empty()) throw std::invalid_argument("write_pgm: empty image");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
  if (!os) throw std::runtime_error("write failed: " + path);
}

namespace {

// next token, skipping whitespace and '#' comment lines
std::string pgm_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!isspace(c)) {
      tok.push_back(static_cast<char>(c));
      break;
    }
  }
  while ((c = is.get()) != EOF && !isspace(c)) tok.push_back(static_cast<char>(c));
  return tok;
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  if (pgm_token(is) != "P5") throw std::runtime_error("not a binary PGM: " + path);
  int w = std::stoi(pgm_token(is));
  int h = std::stoi(pgm_token(is));
  int maxval = std::stoi(pgm_token(is));
  if (w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("unsupported PGM header in " + path);
  GrayImage img(w, h);
  is.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (!is) throw std::runtime_error("truncated PGM: " + path);
  return img;
}

}  // namespace lpdr
