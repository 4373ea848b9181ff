#!/usr/bin/env python3
"""Regenerate the bundled 1984 case-study fixture under src/kgrec/data/.

Only a handful of attributes are grounded in the reference case description:
the dystopian genre shared by 1984 and Fahrenheit 451, the censorship /
oppression / totalitarianism / rebellion themes, comparable complexity for
that pair, and Orwell's authorship of Animal Farm.  Everything else below is
synthetic filler chosen to give the graph a plausible shape, and the written
file header says so.
"""
from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from kgrec.graph import TextRecord, ingest_records, write_triples  # noqa: E402
from kgrec.walks import RelationWeights, write_weights  # noqa: E402

DATA = os.path.join(os.path.dirname(__file__), "..", "src", "kgrec", "data")

VC, MC, SC = "very complex", "moderately complex", "slightly complex"


def text(title, author, year, lexile, genres, themes, subthemes, meaning, structure):
    # the two lower Lexile bands only apply with a matching qualitative label
    if lexile < 925:
        structure = SC
    elif lexile < 1185:
        structure = MC
    return TextRecord(
        title=title, author=author, year=year, lexile=lexile, genres=genres, themes=themes,
        subthemes=subthemes,
        qualitative_measures={"levels_of_meaning": meaning, "text_structure": structure},
    )


RECORDS = [
    # grounded core
    text("1984", "George Orwell", 1949, 1090, ["Dystopian Fiction", "Political Fiction"],
         ["Censorship", "Oppression", "Totalitarianism", "Rebellion"], ["Surveillance", "Propaganda"], VC, MC),
    text("Fahrenheit 451", "Ray Bradbury", 1953, 1110, ["Dystopian Fiction", "Science Fiction"],
         ["Censorship", "Oppression", "Totalitarianism", "Conformity"], ["Surveillance", "Book Burning"], VC, MC),
    text("Animal Farm", "George Orwell", 1945, 1170, ["Political Fiction", "Allegory"],
         ["Totalitarianism", "Rebellion", "Power"], ["Propaganda", "Corruption"], MC, SC),
    text("Brave New World", "Aldous Huxley", 1932, 870, ["Dystopian Fiction", "Science Fiction"],
         ["Totalitarianism", "Conformity", "Oppression"], ["Social Engineering", "Propaganda"], VC, MC),
    text("The Hunger Games", "Suzanne Collins", 2008, 810, ["Dystopian Fiction", "Young Adult"],
         ["Oppression", "Rebellion", "Survival"], ["Spectacle", "Surveillance"], MC, SC),
    text("Marrow Thieves", "Cherie Dimaline", 2017, 760, ["Dystopian Fiction", "Young Adult"],
         ["Oppression", "Rebellion", "Identity"], ["Colonialism", "Survival Journey"], MC, MC),
    # synthetic filler: dystopian near-misses
    text("The Giver", "Lois Lowry", 1993, 760, ["Dystopian Fiction", "Young Adult"],
         ["Conformity", "Memory"], ["Social Engineering", "Coming of Age"], MC, SC),
    text("Scythe", "Neal Shusterman", 2016, 1000, ["Dystopian Fiction", "Science Fiction"],
         ["Mortality", "Power"], ["Technology", "Morality"], MC, MC),
    text("The Pedestrian", "Ray Bradbury", 1951, 1020, ["Science Fiction", "Short Story"],
         ["Conformity", "Isolation"], ["Technology", "Surveillance"], MC, SC),
    text("The Road", "Cormac McCarthy", 2006, 680, ["Post-Apocalyptic Fiction"],
         ["Survival", "Parenthood"], ["Morality", "Survival Journey"], VC, MC),
    text("A Bot Might Have Written This", "Unknown", 2023, 1150, ["Essay"],
         ["Technology Ethics", "Power"], ["Technology", "Authorship"], MC, SC),
    text("The Martian", "Andy Weir", 2011, 680, ["Science Fiction"],
         ["Survival", "Ingenuity"], ["Isolation In Space", "Technology"], SC, SC),
    text("The Last Dog", "Katherine Paterson", 1999, 900, ["Science Fiction", "Short Story"],
         ["Survival", "Companionship"], ["Coming of Age", "Isolation In Space"], MC, SC),
    text("And Then There Were None", "Agatha Christie", 1939, 510, ["Mystery"],
         ["Guilt", "Justice"], ["Isolation", "Morality"], MC, MC),
    text("The Star", "Arthur C. Clarke", 1955, 1140, ["Science Fiction", "Short Story"],
         ["Faith", "Mortality"], ["Cosmic Scale", "Morality"], VC, MC),
    text("My Name is Asher Lev", "Chaim Potok", 1972, 900, ["Coming-of-Age Novel"],
         ["Identity", "Faith"], ["Art", "Family Conflict"], VC, MC),
    text("The Immortal Life of Henrietta Lacks", "Rebecca Skloot", 2010, 1140, ["Nonfiction"],
         ["Medical Ethics", "Race"], ["Consent", "Family Conflict"], MC, MC),
    # synthetic filler: unrelated canon
    text("Romeo and Juliet", "William Shakespeare", 1597, 1260, ["Tragedy", "Drama"],
         ["Love", "Fate"], ["Family Conflict", "Youth"], VC, VC),
    text("Hamlet", "William Shakespeare", 1603, 1390, ["Tragedy", "Drama"],
         ["Revenge", "Mortality"], ["Madness", "Family Conflict"], VC, VC),
    text("Pride and Prejudice", "Jane Austen", 1813, 1100, ["Romance", "Novel of Manners"],
         ["Love", "Class"], ["Marriage", "First Impressions"], MC, MC),
    text("The Great Gatsby", "F. Scott Fitzgerald", 1925, 1070, ["Modernist Fiction"],
         ["Class", "American Dream"], ["Wealth", "Illusion"], VC, MC),
    text("To Kill a Mockingbird", "Harper Lee", 1960, 870, ["Southern Gothic", "Coming-of-Age Novel"],
         ["Justice", "Race"], ["Prejudice", "Youth"], MC, SC),
    text("Of Mice and Men", "John Steinbeck", 1937, 630, ["Novella"],
         ["Friendship", "American Dream"], ["Loneliness", "Wealth"], MC, SC),
    text("Frankenstein", "Mary Shelley", 1818, 1170, ["Gothic Fiction", "Science Fiction"],
         ["Ambition", "Isolation"], ["Creation", "Morality"], VC, VC),
    text("Things Fall Apart", "Chinua Achebe", 1958, 890, ["Postcolonial Literature"],
         ["Colonialism", "Identity"], ["Tradition", "Family Conflict"], VC, MC),
]

GROUND_TRUTH = {"1984": ["Fahrenheit 451", "Brave New World", "Animal Farm", "The Hunger Games", "Marrow Thieves"]}

HEADER = (
    "1984 case-study fixture, 25 texts.\n"
    "Grounded attributes: 1984 and Fahrenheit_451 share Dystopian_Fiction, Censorship, Oppression,\n"
    "Totalitarianism and comparable complexity; Rebellion links the ground-truth texts; Animal_Farm\n"
    "has_author George_Orwell.  ALL OTHER ATTRIBUTES ARE SYNTHETIC (invented to shape the graph).\n"
    "Regenerate with scripts/build_case_fixture.py."
)

QUALITATIVE = ("has_levels_of_meaning", "has_text_structure",
               "has_language_conventionality_and_clarity", "has_knowledge_demands")
DEFAULT_WEIGHTS = {"has_genre": 3, "has_theme": 3, "has_subtheme": 3,
                   **{q: 2 for q in QUALITATIVE},
                   "has_author": 1, "hasEra": 1, "hasTextComplexity": 1}
GENRE_WEIGHTS = {**DEFAULT_WEIGHTS, "has_genre": 4}


def _id(title):
    return title.replace(" ", "_")


def main():
    os.makedirs(DATA, exist_ok=True)
    write_triples(os.path.join(DATA, "case_1984.tsv"), ingest_records(RECORDS), header=HEADER)
    with open(os.path.join(DATA, "case_1984_ground_truth.tsv"), "w", encoding="utf-8") as fh:
        for anchor, gt in GROUND_TRUTH.items():
            fh.write(f"{_id(anchor)}\t{','.join(_id(g) for g in gt)}\n")
    with open(os.path.join(DATA, "case_1984_texts.txt"), "w", encoding="utf-8") as fh:
        fh.writelines(_id(r.title) + "\n" for r in RECORDS)
    write_weights(os.path.join(DATA, "weights_default.tsv"), RelationWeights(DEFAULT_WEIGHTS))
    write_weights(os.path.join(DATA, "weights_genre.tsv"), RelationWeights(GENRE_WEIGHTS))


if __name__ == "__main__":
    main()
