"""Write the small synthetic resources shipped with the CLI crate.

    python3 tools/fixtures/make_fixtures.py

Outputs (under crates/followcast/fixtures/):
  names.csv        given names with gender and impression tags (tags are
                   drawn pseudo-randomly; the real community ratings are not
                   redistributable)
  words.txt        a small English wordlist
  group_cases.csv  500 name fields with the group an independent
                   normaliser assigns them (NFKD folding, not the crate's
                   lookup table)
"""

import csv
import os
import random
import unicodedata

OUT = os.path.join(os.path.dirname(__file__), "..", "..", "crates", "followcast", "fixtures")
rng = random.Random(6354052)

MALE = """james john robert michael william david richard joseph thomas charles christopher daniel matthew
anthony mark donald steven paul andrew joshua kenneth kevin brian george timothy ronald edward jason
jeffrey ryan jacob gary nicholas eric jonathan stephen larry justin scott brandon benjamin samuel
gregory alexander frank patrick raymond jack dennis jerry tyler aaron jose adam nathan henry douglas
zachary peter kyle noah ethan jeremy walter christian keith roger terry austin sean gerald carl harold
dylan arthur lawrence jordan jesse bryan billy bruce gabriel joe logan albert willie alan eugene russell
vincent philip bobby johnny bradley luca mateo hans lars""".split()

FEMALE = """mary patricia jennifer linda elizabeth barbara susan jessica sarah karen lisa nancy betty sandra
margaret ashley kimberly emily donna michelle carol amanda melissa deborah stephanie dorothy rebecca
sharon laura cynthia amy kathleen angela shirley brenda emma anna pamela nicole samantha katherine
christine helen debra rachel carolyn janet maria catherine heather diane olivia julie joyce victoria
ruth virginia lauren kelly christina joan evelyn judith andrea hannah megan cheryl jacqueline martha
madison teresa gloria sara janice ann kathryn abigail sophia frances jean alice judy isabella julia
grace amber denise danielle marilyn beverly charlotte natalie theresa diana brittany doris kayla
alexis lori marie rose hope joy chloe zoe ingrid""".split()

BOTH = "alex jordan taylor morgan casey jamie robin sam kim riley".split()

WORDS = """able about above accept account across action active actor actual adult advice affect after again
against agent agree ahead air allow almost alone along already also always amount animal another answer
anyone apple april area argue army around arrive art article artist attack author avoid away baby back
bad bag ball bank bar base basic beach bear beat beautiful because become bed before begin behind believe
best better beyond big bill bird black blood blue board boat body book born both box boy brain bread
break bring brother budget build business busy buy call camera campaign cancer capital car card care
career carry case cat catch cause cell center central century chair chance change charge check child
choice choose church citizen city civil claim class clear coach coffee cold collect college color come
common community company cook cool corner cost country couple course court cover crazy create crime
crypto culture cup current dance dark data daughter dawn day dead deal dear death debate decide deep
design detail develop diet dinner direct doctor dog door dream dress drink drive drop early earth east
easy eat economy edge effect effort eight energy enjoy enough enter entire event every evidence exact
example expert eye face fact faith fall family fan far farm fast father fear feel field fight figure
film final find fine fire firm first fish five floor fly focus follow food foot force forest forget form
free friend front fruit fun future game garden gas general generation girl give glass global goal gold
good government grace great green ground group grow guess gun guy hair half hand happy hard hat head
health hear heart heat heavy help high history hold home hope hot hotel hour house huge human hundred
idea image impact inside interest island issue item jack job join joy judge just keep key kid kill kind
king kitchen know land language large last late laugh law lawyer lead learn leave left legal less letter
level lie life light like line list listen little live local long look lose loss love low lucky machine
magic main major make man manage many map mark market matter maybe media medical meet member memory
mention message method middle might military million mind minute miss model modern moment money month
moon more morning mother mouth move movie music must nation natural nature near need network never news
next nice night north note nothing notice number ocean offer office official often oil old only open
option order other owner page pain paint paper parent park part party pass past patient pattern pay
peace people perfect period person phone photo pick picture piece place plan plant play player point
police policy poor popular power practice present pretty price prince private problem process produce
product program project property protect prove public pull purple push queen question quick quiet race
radio rain range rate reach read ready real reason record red region remember report rest result return
rich ride right rise risk river road rock role room rose rule run safe sale save say scene school science
sea season seat second secret security seek sell send sense series serious serve seven shake share shoot
short show side sign simple sing single sister sit six size skill skin sky small smile social soft soldier
solid son song soon sort sound south space speak special sport spring staff stage star start state stay
step still stock stone stop story street strong student study style subject success summer sun support
sure surface system table take talk teach team tech tell ten term test thank theory thing third three
time today together tonight top total tough town trade trader travel tree trip trouble true truth try
turn type under unit until upon value very view visit voice vote wait walk wall want war watch water
wave way weapon wear web week weight west while white whole wife will win wind window wish woman wonder
word work world worry write wrong yard year yellow young""".split()

TAGS = """good bad masculine feminine classic modern mature youthful formal informal upper-class common urban
natural wholesome devious strong delicate refined rough strange boring simple complex serious comedic
nerdy unintellectual""".split()

# Letters in U+00C0..U+017F that NFKD does not reduce to ASCII letters.
SPECIAL = {
    "Æ": "ae", "æ": "ae", "Ð": "d", "ð": "d", "Ø": "o", "ø": "o", "Þ": "th", "þ": "th", "ß": "ss",
    "Đ": "d", "đ": "d", "Ħ": "h", "ħ": "h", "ı": "i", "ĸ": "k", "Ŀ": "l", "ŀ": "l", "Ł": "l", "ł": "l",
    "ŉ": "n", "Ŋ": "ng", "ŋ": "ng", "Œ": "oe", "œ": "oe", "Ŧ": "t", "ŧ": "t",
}


def fold_char(c):
    cp = ord(c)
    if c.isascii() and c.isalpha():
        return c.lower()
    if 0xC0 <= cp <= 0x17F:
        if c in SPECIAL:
            return SPECIAL[c]
        base = "".join(ch for ch in unicodedata.normalize("NFKD", c) if not unicodedata.combining(ch))
        base = base.lower()
        return base if base and base.isascii() and base.isalpha() else None
    if 0x300 <= cp <= 0x36F:
        return ""
    return None


def tokens(field):
    out, cur = [], ""
    for c in field:
        f = fold_char(c)
        if f is None:
            if cur:
                out.append(cur)
            cur = ""
        else:
            cur += f
    if cur:
        out.append(cur)
    return out


def group(field, names, words):
    t = tokens(field)
    if any(x in names for x in t):
        return "contains_name"
    if any(x in words for x in t):
        return "contains_words"
    return "custom_content"


def accent(word):
    table = {"a": "áàâäãå", "e": "éèêë", "i": "íìîï", "o": "óòôöõø", "u": "úùûü", "c": "ç", "n": "ñ", "s": "śš", "z": "žź"}
    out = []
    for ch in word:
        if ch in table and rng.random() < 0.35:
            out.append(rng.choice(table[ch]))
        elif ch in "aeiou" and rng.random() < 0.05:
            # Decomposed form: base letter plus a combining mark.
            out.append(ch + rng.choice(["́", "̈"]))
        else:
            out.append(ch)
    return "".join(out)


def gibberish(names, words):
    while True:
        s = "".join(rng.choice("bcdfghjklmnpqrstvwxz" if i % 2 == 0 else "aeiouy") for i in range(rng.randint(3, 8)))
        if s not in names and s not in words:
            return s


def case(names, words):
    name_list, word_list = sorted(names), sorted(words)
    parts = []
    for _ in range(rng.randint(0, 4)):
        kind = rng.random()
        if kind < 0.25:
            t = rng.choice(name_list)
        elif kind < 0.5:
            t = rng.choice(word_list)
        elif kind < 0.7:
            t = gibberish(names, words)
        elif kind < 0.8:
            t = rng.choice(["火星人", "Дмитрий", "Δημήτρης", "محمد", "🚀", "★彡", "ß", "Œuvre", "Þór", "Łukasz", "ŋ"])
        elif kind < 0.9:
            t = str(rng.randint(0, 9999))
        else:
            # A name or word glued to other letters is not a whole token.
            t = rng.choice(name_list + word_list) + gibberish(names, words)
        if rng.random() < 0.3:
            t = accent(t)
        r = rng.random()
        t = t.upper() if r < 0.1 else t.capitalize() if r < 0.6 else t
        parts.append(t)
    seps = [" ", "_", ".", "-", " | ", "@", "·", "×", " ", "", "2"]
    out = ""
    for i, p in enumerate(parts):
        if i:
            out += rng.choice(seps)
        out += p
    if rng.random() < 0.1:
        out = "@" + out
    return out


def main():
    os.makedirs(OUT, exist_ok=True)
    names = {}
    for n in MALE:
        names[n] = "male"
    for n in FEMALE:
        names[n] = "female" if n not in names else "both"
    for n in BOTH:
        names[n] = "both"
    with open(os.path.join(OUT, "names.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "gender", "impressions"])
        for n in sorted(names):
            tags = sorted(rng.sample(TAGS, rng.randint(0, 5)), key=TAGS.index)
            w.writerow([n, names[n], ";".join(tags)])
    words = sorted(set(WORDS))
    with open(os.path.join(OUT, "words.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(words) + "\n")

    name_set, word_set = set(names), set(words)
    rows = []
    # Priority cases: a name wins over any number of words.
    for n, wd in [("john", "runner"), ("rose", "happy"), ("grace", "music"), ("anna", "cat")]:
        for field in [f"{n} {wd}", f"{wd} {n}", f"{wd.upper()}_{n.capitalize()}", f"{wd} {wd} {n}"]:
            rows.append(field)
    rows += ["", "@火星人 2049", "José Müller", "WebScience", "crypto trader", "happy xqz"]
    while len(rows) < 500:
        rows.append(case(name_set, word_set))
    with open(os.path.join(OUT, "group_cases.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name_field", "expected_group"])
        for field in rows:
            w.writerow([field, group(field, name_set, word_set)])
    counts = {}
    for field in rows:
        g = group(field, name_set, word_set)
        counts[g] = counts.get(g, 0) + 1
    print(len(names), "names;", len(words), "words;", counts)


if __name__ == "__main__":
    main()
