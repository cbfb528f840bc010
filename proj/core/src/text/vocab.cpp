#include "mammoth2/text/vocab.hpp"

#include <sstream>

#include "mammoth2/errors.hpp"

namespace m2::text {

namespace {

const char* const kControlNames[] = {"<pad>", "<bos>", "<eos>",  "<unk>", "<img>",
                                     "<img_end>", "<t2i>", "<edit>", "<und>"};
constexpr int kControlCount = 9;

}  // namespace

Vocab::Vocab()
    : words_{"a",      "the",    "at",     "small",  "large",   "red",    "green",
             "blue",   "yellow", "purple", "circle", "square",  "triangle", "diamond",
             "top",    "bottom", "left",   "right",  "center",  "recolor", "to"} {
    for (int i = 0; i < static_cast<int>(words_.size()); ++i)
        index_.emplace(words_[static_cast<size_t>(i)], kFirstWord + i);
}

int Vocab::id(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::word(int id) const {
    static const std::string reserved = "<reserved>";
    static const std::string controls[kControlCount] = {
        kControlNames[0], kControlNames[1], kControlNames[2], kControlNames[3], kControlNames[4],
        kControlNames[5], kControlNames[6], kControlNames[7], kControlNames[8]};
    M2_CHECK(id >= 0 && id < size(), "token id out of vocabulary range");
    if (id < kControlCount) return controls[id];
    if (id < kFirstWord) return reserved;
    return words_[static_cast<size_t>(id - kFirstWord)];
}

std::vector<int> Vocab::encode(const std::string& sentence) const {
    std::istringstream ss(sentence);
    std::vector<int> ids;
    std::string w;
    while (ss >> w) ids.push_back(id(w));
    return ids;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
    std::string out;
    for (int id : ids) {
        if (!out.empty()) out += ' ';
        out += word(id);
    }
    return out;
}

}  // namespace m2::text
