#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace m2::text {

// Control-token ids; the word list starts at kFirstWord so control ids stay
// stable if words are added.
constexpr int kPad = 0;
constexpr int kBos = 1;
constexpr int kEos = 2;
constexpr int kUnk = 3;
constexpr int kImg = 4;      // opens a visual-token block
constexpr int kImgEnd = 5;   // closes a conditioning visual block
constexpr int kT2i = 6;      // task tag: text-to-image
constexpr int kEdit = 7;     // task tag: instructed edit
constexpr int kUnd = 8;      // task tag: image understanding (captioning)
constexpr int kFirstWord = 16;

// Fixed whitespace-token vocabulary over the scene-caption and edit-
// instruction grammars.
class Vocab {
public:
    Vocab();

    int id(const std::string& word) const;  // kUnk for out-of-vocabulary words
    const std::string& word(int id) const;  // control ids render as <pad>, <bos>, ...
    int size() const { return kFirstWord + static_cast<int>(words_.size()); }

    std::vector<int> encode(const std::string& sentence) const;  // whitespace split
    std::string decode(const std::vector<int>& ids) const;

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace m2::text
